"""Command handlers for the spdgeo command line."""

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from spdgeo.api.matrix_io import load_hermitian, load_spd, load_spd_many, matrix_to_json, save_matrices, save_matrix
from spdgeo.core.matcore import MatrixLike, random_spd
from spdgeo.models.schemas import (
    CheckReport,
    CheckSpec,
    DominanceVerdict,
    GeodesicFamily,
    KernelSpec,
    MeanSpec,
    NormSpec,
    PathSearchConfig,
    format_float,
)
from spdgeo.services.geodesic_service import (
    Curve,
    alm_3mean,
    closed_form_distance,
    curve_length,
    geodesic_point,
    karcher_mean,
    numeric_shortest_distance,
)
from spdgeo.services.mean_service import kernel_eval, mean_eval, pointwise_dominates
from spdgeo.services.metric_service import metric_eval
from spdgeo.services.verify_service import VerificationService

SpecT = TypeVar("SpecT", bound=BaseModel)

COMPARE_HEADER = ("mean", "theta", "delta_M_theta", "delta_phi_theta", "relation")

# kernel order phi1 <= phi2 reverses into delta_1 >= delta_2
RELATIONS = {
    DominanceVerdict.DOMINATED: ">=",
    DominanceVerdict.DOMINATES: "<=",
    DominanceVerdict.EQUAL: "=",
    DominanceVerdict.INCOMPARABLE: "incomparable",
}


@dataclass
class CommandDefinition:
    """A subcommand: its flags and the handler that runs it."""

    name: str
    help: str
    configure: Callable[[argparse.ArgumentParser], None]
    handler: Callable[[argparse.Namespace], int]


# Flag value parsers; argparse turns their ValueErrors into usage errors

def mean_spec(text: str) -> MeanSpec:
    return MeanSpec.parse(text)


def kernel_spec(text: str) -> KernelSpec:
    return KernelSpec.parse(text)


def norm_spec(text: str) -> NormSpec:
    return NormSpec.parse(text)


def geodesic_family(text: str) -> GeodesicFamily:
    return GeodesicFamily.parse(text)


def float_list(text: str) -> List[float]:
    values = [float(item) for item in text.split(",") if item.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected a comma separated list of numbers")
    if not all(math.isfinite(value) for value in values):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got {text}")
    return values


def mean_list(text: str) -> List[MeanSpec]:
    means = [MeanSpec.parse(item) for item in text.split(",") if item.strip()]
    if not means:
        raise argparse.ArgumentTypeError("expected a comma separated list of means")
    return means


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def seed_value(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {text}")
    return value


def _emit_matrix(matrix: MatrixLike, out: Optional[str] = None) -> None:
    if out:
        save_matrix(matrix, out)
    else:
        print(matrix_to_json(matrix))


def _add_norm(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--norm", type=norm_spec, default=NormSpec.hs(), help="hs | op | schatten:<p> | kyfan:<k>")


def _add_search(parser: argparse.ArgumentParser, segments: int, iterations: int) -> None:
    parser.add_argument("--segments", type=positive_int, default=segments, help="polyline segments")
    parser.add_argument("--iters", type=positive_int, default=iterations, help="descent sweeps per level")
    parser.add_argument("--seed", type=seed_value, default=0, help="seed of the search directions")
    parser.add_argument("--refinements", type=int, default=0, help="segment doublings after convergence")


def _from_flags(args: argparse.Namespace, model: Type[SpecT], **fields: Any) -> SpecT:
    """Validate a spec built from flag values; invalid values exit with the usage status."""
    try:
        return model(**fields)
    except ValidationError as e:
        args.subparser.error(str(e))


def _search_config(args: argparse.Namespace) -> PathSearchConfig:
    return _from_flags(
        args,
        PathSearchConfig,
        segments=args.segments,
        max_iterations=args.iters,
        seed=args.seed,
        refinements=args.refinements,
    )


# Scalar evaluation

def _configure_mean_eval(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mean", type=mean_spec, required=True, help="e.g. geometric, stolarsky:2, alpha:0.5, wyd:0.3")
    parser.add_argument("--x", type=float, required=True)
    parser.add_argument("--y", type=float, required=True)


def run_mean_eval(args: argparse.Namespace) -> int:
    print(format_float(mean_eval(args.mean, args.x, args.y)))
    return 0


def _configure_kernel_eval(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", type=kernel_spec, required=True, help="MEAN[:param]^THETA or bures | bkm | wy")
    parser.add_argument("--x", type=float, required=True)
    parser.add_argument("--y", type=float, required=True)


def run_kernel_eval(args: argparse.Namespace) -> int:
    print(format_float(kernel_eval(args.kernel, args.x, args.y)))
    return 0


def _configure_metric_eval(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", type=kernel_spec, required=True)
    parser.add_argument("--d", required=True, help="foot point (SPD matrix file)")
    parser.add_argument("--h", required=True, help="tangent vector (Hermitian matrix file)")
    parser.add_argument("--k", required=True, help="tangent vector (Hermitian matrix file)")


def run_metric_eval(args: argparse.Namespace) -> int:
    D = load_spd(args.d)
    value = metric_eval(args.kernel, D, load_hermitian(args.h), load_hermitian(args.k))
    print(format_float(value))
    return 0


# Geodesics and distances

def _configure_geodesic(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", type=geodesic_family, required=True, help="theta:<t> | alpha:<a> | fisher | sqrt")
    parser.add_argument("--a", required=True)
    parser.add_argument("--b", required=True)
    parser.add_argument("--t", type=float, required=True)
    parser.add_argument("--out", help="matrix file to write instead of stdout")


def run_geodesic(args: argparse.Namespace) -> int:
    point = geodesic_point(args.family, load_spd(args.a), load_spd(args.b), args.t)
    _emit_matrix(point, args.out)
    return 0


def _configure_distance(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", type=geodesic_family, required=True)
    _add_norm(parser)
    parser.add_argument("--a", required=True)
    parser.add_argument("--b", required=True)


def run_distance(args: argparse.Namespace) -> int:
    print(format_float(closed_form_distance(args.family, args.norm, load_spd(args.a), load_spd(args.b))))
    return 0


def _configure_length(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", type=kernel_spec, required=True)
    parser.add_argument("--path", nargs="+", required=True, help="polyline node files in order")
    _add_norm(parser)
    parser.add_argument("--quadrature", type=positive_int, default=None, help="Gauss points per segment")


def run_length(args: argparse.Namespace) -> int:
    nodes = load_spd_many(args.path)
    if len(nodes) < 2:
        print(format_float(0.0))
        return 0
    length = curve_length(args.kernel, Curve.polyline(nodes), args.norm, args.quadrature)
    print(format_float(length))
    return 0


def _configure_shortest(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", type=kernel_spec, required=True)
    parser.add_argument("--a", required=True)
    parser.add_argument("--b", required=True)
    _add_norm(parser)
    _add_search(parser, segments=16, iterations=500)
    parser.add_argument("--dump", help="write the optimized polyline nodes here")


def run_shortest(args: argparse.Namespace) -> int:
    result = numeric_shortest_distance(
        args.kernel, load_spd(args.a), load_spd(args.b), _search_config(args), args.norm
    )
    if args.dump:
        save_matrices(result.path.nodes, args.dump)
    print(format_float(result.distance))
    return 0


# Multi-matrix means

def _configure_karcher(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--inputs", nargs="+", required=True)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--out")


def run_karcher(args: argparse.Namespace) -> int:
    _emit_matrix(karcher_mean(load_spd_many(args.inputs), alpha=args.alpha, tol=args.tol), args.out)
    return 0


def _configure_alm3(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--inputs", nargs=3, required=True, metavar=("A", "B", "C"))
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--out")


def run_alm3(args: argparse.Namespace) -> int:
    A, B, C = load_spd_many(args.inputs)
    _emit_matrix(alm_3mean(A, B, C, tol=args.tol), args.out)
    return 0


# Comparison table

def _configure_compare(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--a", required=True)
    parser.add_argument("--b", required=True)
    parser.add_argument("--thetas", type=float_list, required=True, help="comma separated, e.g. --thetas=-2,1,4")
    parser.add_argument("--means", type=mean_list, required=True, help="comma separated mean specs")
    _add_norm(parser)
    _add_search(parser, segments=8, iterations=200)


def run_compare(args: argparse.Namespace) -> int:
    """One CSV row per (mean, theta): numeric delta for M^theta, closed form for phi_theta."""
    A, B = load_spd(args.a), load_spd(args.b)
    cfg = _search_config(args)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(COMPARE_HEADER)
    for mean in args.means:
        for theta in args.thetas:
            kernel = KernelSpec.of(mean, theta)
            reference = closed_form_distance(GeodesicFamily.theta(theta), args.norm, A, B)
            numeric = numeric_shortest_distance(kernel, A, B, cfg, args.norm)
            verdict = pointwise_dominates(kernel, KernelSpec.stolarsky(theta))
            writer.writerow(
                (str(mean), format_float(theta), format_float(numeric.distance), format_float(reference), RELATIONS[verdict])
            )
    return 0


# Verification suite

def _configure_verify(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--check", help="run one catalog check (default: all)")
    parser.add_argument("--seed", type=seed_value, default=0)
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--samples", type=positive_int, default=200)
    parser.add_argument("--list", action="store_true", help="print the catalog and exit")


def run_verify(args: argparse.Namespace) -> int:
    service = VerificationService()
    if args.list:
        for name in service.catalog:
            print(f"{name}\t{service.checks[name].description}")
        return 0
    spec = _from_flags(args, CheckSpec, name=args.check or "all", seed=args.seed, dimension=args.dim, samples=args.samples)
    if args.check:
        reports: List[CheckReport] = [service.run_check(spec)]
    else:
        reports = service.run_all(spec.seed, spec.dimension, spec.samples)
    for report in reports:
        print(report.model_dump_json(by_alias=True))
    return 0 if all(report.passed for report in reports) else 1


# Sampling

def _configure_gen(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=positive_int, required=True)
    parser.add_argument("--seed", type=seed_value, default=0)
    parser.add_argument("--spread", type=float, default=1.0, help="eigenvalues lie in [e^-spread, e^spread]")
    parser.add_argument("--real", action="store_true", help="real symmetric output")
    parser.add_argument("--out")


def run_gen(args: argparse.Namespace) -> int:
    _emit_matrix(random_spd(args.n, args.seed, args.spread, complex_entries=not args.real), args.out)
    return 0


COMMANDS: List[CommandDefinition] = [
    CommandDefinition("mean-eval", "evaluate a scalar mean M(x, y)", _configure_mean_eval, run_mean_eval),
    CommandDefinition("kernel-eval", "evaluate a kernel phi(x, y)", _configure_kernel_eval, run_kernel_eval),
    CommandDefinition("metric-eval", "evaluate the kernel metric K_D(H, K)", _configure_metric_eval, run_metric_eval),
    CommandDefinition("geodesic", "point of a closed-form geodesic", _configure_geodesic, run_geodesic),
    CommandDefinition("distance", "closed-form geodesic distance", _configure_distance, run_distance),
    CommandDefinition("length", "length of a polyline under a kernel metric", _configure_length, run_length),
    CommandDefinition("shortest", "numeric shortest-path distance", _configure_shortest, run_shortest),
    CommandDefinition("karcher", "Karcher mean of power-transformed matrices", _configure_karcher, run_karcher),
    CommandDefinition("alm3", "ALM geometric mean of three matrices", _configure_alm3, run_alm3),
    CommandDefinition("compare", "CSV comparison of delta_{M^theta} with delta_{phi_theta}", _configure_compare, run_compare),
    CommandDefinition("verify", "run the verification suite (JSON lines)", _configure_verify, run_verify),
    CommandDefinition("gen", "seeded random SPD matrix", _configure_gen, run_gen),
]
