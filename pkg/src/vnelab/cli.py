"""Command-line entry points: generate, train, run, report."""

import argparse
import sys

import numpy as np

from .embedders import (ALGORITHMS, FEATURE_SOURCES, LINK_STRATEGIES,
                        EmbedderConfig, PointerAgent, PolicyAgent,
                        active_search, baseline_embed, make_feature_provider,
                        noderank_embed, train_agent)
from .errors import VneError
from .learncore import load_params, save_params
from .netmodel import read_substrate, write_substrate
from .sim import (generate_requests, generate_substrate, load_config, report,
                  read_requests, run_simulation, write_requests)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vnelab",
        description="Virtual network embedding: scenario generation, agent "
                    "training, simulation runs, and report aggregation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a substrate and request trace")
    p.add_argument("--config", required=True, help="flat key = value file")
    p.add_argument("--out-substrate", required=True)
    p.add_argument("--out-requests", required=True)

    p = sub.add_parser("train", help="train an agent on a generated scenario")
    p.add_argument("--algo", required=True, choices=("rl", "pointer"))
    p.add_argument("--features", required=True, choices=FEATURE_SOURCES)
    p.add_argument("--config", required=True)
    p.add_argument("--out-params", required=True)

    p = sub.add_parser("run", help="simulate one algorithm over a request trace")
    p.add_argument("--substrate", required=True)
    p.add_argument("--requests", required=True)
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--params", help="checkpoint file (rl and pointer)")
    p.add_argument("--features", choices=FEATURE_SOURCES)
    p.add_argument("--link", choices=LINK_STRATEGIES)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="results CSV path")

    p = sub.add_parser("report", help="align long-term metrics across runs")
    p.add_argument("--in", dest="inputs", required=True, nargs="+",
                   metavar="CSV")
    p.add_argument("--out", required=True)
    return parser


def _cmd_generate(args):
    cfg = load_config(args.config)
    net = generate_substrate(cfg)
    requests = generate_requests(cfg)
    write_substrate(net, args.out_substrate)
    write_requests(requests, args.out_requests)
    print("substrate: %d nodes, %d links -> %s"
          % (net.num_nodes(), net.num_links(), args.out_substrate))
    print("requests: %d -> %s" % (len(requests), args.out_requests))
    return 0


def _cmd_train(args):
    cfg = load_config(args.config)
    substrate = generate_substrate(cfg)
    requests = generate_requests(cfg)
    econfig = cfg.embedder_config(args.algo, features=args.features)
    agent, curve = train_agent(substrate, requests, econfig)
    save_params(agent.params, args.out_params)
    for epoch, mean in enumerate(curve):
        print("epoch %d mean_reward %s" % (epoch, repr(mean)))
    print("params -> %s" % args.out_params)
    return 0


def _load_agent(args):
    if not args.params:
        raise VneError("--algo %s requires --params" % args.algo)
    params = load_params(args.params)
    cls = PolicyAgent if args.algo == "rl" else PointerAgent
    return cls.from_params(params)


def _make_embed_fn(args, net):
    features = args.features or "raw"
    if args.algo == "baseline":
        link = args.link or "shortest"
        return lambda net, vnr: baseline_embed(net, vnr, link)
    if args.algo == "noderank":
        link = args.link or "shortest"
        return lambda net, vnr: noderank_embed(net, vnr, link)
    agent = _load_agent(args)
    if features == "raw":
        provider = make_feature_provider("raw", net)
        if provider.dim != agent.feature_dim:
            raise VneError(
                "checkpoint expects %d features per node, raw provides %d"
                % (agent.feature_dim, provider.dim))
    else:
        provider = make_feature_provider(features, net, k=agent.feature_dim)
        if provider.dim != agent.feature_dim:
            raise VneError(
                "checkpoint expects %d features per node, %s on this substrate "
                "provides %d" % (agent.feature_dim, features, provider.dim))
    if args.algo == "rl":
        link = args.link or "bfs"

        def embed_rl(net, vnr):
            emb, _ = agent.embed(net, vnr, provider.features(net), link=link)
            return emb

        return embed_rl
    econfig = EmbedderConfig(algorithm="pointer", link=args.link,
                             features=features, seed=args.seed)
    rng = np.random.default_rng(args.seed)

    def embed_pointer(net, vnr):
        return active_search(net, vnr, agent, provider.features(net),
                             econfig, rng)

    return embed_pointer


def _cmd_run(args):
    net = read_substrate(args.substrate)
    requests = read_requests(args.requests)
    embed_fn = _make_embed_fn(args, net)
    with open(args.out, "w") as fh:
        totals = run_simulation(net, requests, embed_fn, out_stream=fh)
    rc = totals.long_term_rc()
    acc = totals.acceptance_rate()
    print("%d arrivals, %d accepted -> %s" % (totals.arrived, totals.accepted,
                                              args.out))
    print("long_term_rc %s acceptance_rate %s"
          % ("n/a" if rc is None else repr(rc),
             "n/a" if acc is None else repr(acc)))
    return 0


def _cmd_report(args):
    report(args.inputs, args.out)
    print("report -> %s" % args.out)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"generate": _cmd_generate, "train": _cmd_train,
               "run": _cmd_run, "report": _cmd_report}[args.command]
    try:
        return handler(args)
    except VneError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
