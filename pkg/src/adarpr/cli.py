"""Command line entry point: ``adarpr {synthetic,image,selftest}``.

Exit codes: 0 on success, 1 on invalid input or I/O errors, 2 when the
self-test reports a failing property.
"""
import argparse
import sys

from .bench import ExperimentConfig, format_summary, run_experiment
from .problems import ImageSpec, SyntheticSpec
from .selftest import selftest

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SELFTEST = 2

DEFAULT_ALGOS = "adasubgrad,gsubgrad,ipl-lac,ipl-hac,adaipl-lac,adaipl-hac"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which collides with the
    # self-test failure code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def parse_seeds(text):
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,10"``."""
    seeds = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, sep, hi = part.partition("-")
        if sep:
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    if min(seeds) < 0:
        raise ValueError("seeds must be non-negative")
    return sorted(set(seeds))


def _split_algos(text):
    return [a for a in (s.strip() for s in text.split(",")) if a]


def _add_shared(p):
    p.add_argument("--pfail", type=float, default=0.1, help="corrupted fraction")
    p.add_argument("--algos", default=DEFAULT_ALGOS,
                   help="comma list, optional overrides as name:key=val;key=val")
    p.add_argument("--G", type=float, default=0.5, help="AdaSubGrad step multiplier")
    p.add_argument("--G-ipl", type=float, default=None,
                   help="AdaIPL step multiplier (default 100/n)")
    p.add_argument("--ptilde", type=float, default=0.5, help="residual quantile level")
    p.add_argument("--rho-l", type=float, default=0.24)
    p.add_argument("--rho-h", type=float, default=0.24)
    p.add_argument("--q", type=float, default=0.983, help="GSubGrad decay factor")
    p.add_argument("--lambda0-scale", type=float, default=0.1,
                   help="GSubGrad initial step as a multiple of ||x0||")
    p.add_argument("--inner-solver", choices=("apg", "apd"), default="apg")
    p.add_argument("--eps", type=float, default=1e-7, help="target relative error")
    p.add_argument("--seeds", default="0-9")
    p.add_argument("--init", default="spectral", help="spectral or warm:<delta>")
    p.add_argument("--out", default=None, metavar="DIR")
    p.add_argument("--jobs", type=int, default=1)


def build_parser():
    parser = _Parser(prog="adarpr", description="Robust phase retrieval benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    syn = sub.add_parser("synthetic", help="Gaussian instances with decaying covariance")
    syn.add_argument("--n", type=int, default=200)
    syn.add_argument("--m-ratio", type=float, default=8.0)
    _add_shared(syn)

    img = sub.add_parser("image", help="PPM image under Hadamard sensing")
    img.add_argument("--ppm", required=True, metavar="PATH")
    img.add_argument("--blocks", type=int, default=6)
    _add_shared(img)

    st = sub.add_parser("selftest", help="numerical invariant checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _config(args):
    if args.command == "synthetic":
        m = round(args.m_ratio * args.n)
        instance = SyntheticSpec(args.n, m, args.pfail)
    else:
        instance = ImageSpec(args.ppm, args.blocks, args.pfail)
    if args.jobs < 1:
        raise ValueError("--jobs must be at least 1")
    options = {
        "G": args.G, "G_ipl": args.G_ipl, "ptilde": args.ptilde, "rho_l": args.rho_l,
        "rho_h": args.rho_h, "q": args.q, "lambda0_scale": args.lambda0_scale,
        "inner_solver": args.inner_solver,
    }
    return ExperimentConfig(instance, _split_algos(args.algos), parse_seeds(args.seeds),
                            args.eps, args.init, args.out, args.jobs, options)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return EXIT_OK if selftest(args.seed) else EXIT_SELFTEST
    try:
        cfg = _config(args)
        result = run_experiment(cfg)
    except (ValueError, TypeError, OSError) as exc:
        print(f"adarpr: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(format_summary(result.summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
