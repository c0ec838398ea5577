"""
Command-line front end.

    python -m app.cli certify REQUEST.json [--mu M] [--tol T] [--threads K]
    python -m app.cli scan PLANE.json --N N [--mu M] [--rays R] [--threads K]
    python -m app.cli hull PLANE.json --N N [--rays R]
    python -m app.cli bound INEQUALITY.json --N N [--threads K]
    python -m app.cli export REQUEST.json [--mu M]

Files may be "-" for standard input. JSON and CSV go to standard output (or
--output); logs and errors go to standard error.

Settings come from their defaults and the flags; environment variables and
.env are not read.

Exit codes: 0 decided verdict (and every successful non-certify command),
2 no violation at this level or inconclusive, 1 input or runtime error.
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError as PydanticValidationError

from app.config import reset_to_defaults, settings
from app.core.exceptions import CertifierException
from app.core.logging import configure_logging
from app.schemas.certify import BoundRequest, CertifyRequest, ExportRequest, HullRequest, PlaneSpec, ScanRequest
from app.services import certification
from app.utils.tables import scan_csv, scan_metadata


logger = logging.getLogger(__name__)

EXIT_DECIDED = 0
EXIT_ERROR = 1
EXIT_UNDECIDED = 2


def _load(path: str) -> Dict[str, Any]:
    if path == "-":
        return json.load(sys.stdin)
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _dump(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _plane_payload(data: Dict[str, Any]) -> Dict[str, Any]:
    return data["plane"] if "plane" in data else data


def cmd_certify(args: argparse.Namespace) -> int:
    data = _load(args.request)
    if args.mu is not None:
        data["mu"] = args.mu
    request = CertifyRequest(**data)
    report = certification.certify(request, tolerance=args.tol, threads=args.threads)
    _emit(_dump(report.model_dump()), args.output)
    return EXIT_DECIDED if report.decided else EXIT_UNDECIDED


def cmd_scan(args: argparse.Namespace) -> int:
    plane = PlaneSpec(**_plane_payload(_load(args.plane)))
    request = ScanRequest(N=args.N, mu=args.mu, plane=plane, rays=args.rays, shared=args.shared)
    report = certification.scan(request, threads=args.threads)
    for warning in report.warnings:
        logger.warning(warning)
    if args.json:
        _emit(_dump(report.model_dump()), args.output)
    else:
        _emit(scan_csv(report.rows), args.output)
        if args.output:
            _emit(_dump(scan_metadata(report)), args.output + ".json")
    return EXIT_DECIDED


def cmd_hull(args: argparse.Namespace) -> int:
    plane = PlaneSpec(**_plane_payload(_load(args.plane)))
    report = certification.hull(HullRequest(N=args.N, plane=plane, rays=args.rays), threads=args.threads)
    _emit(_dump(report.model_dump()), args.output)
    return EXIT_DECIDED


def cmd_bound(args: argparse.Namespace) -> int:
    data = _load(args.inequality)
    data["N"] = args.N
    report = certification.bound(BoundRequest(**data), threads=args.threads)
    _emit(_dump(report.model_dump()), args.output)
    return EXIT_DECIDED


def cmd_export(args: argparse.Namespace) -> int:
    data = _load(args.request)
    if args.mu is not None:
        data["mu"] = args.mu
    _emit(certification.export(ExportRequest(**data)), args.output)
    return EXIT_DECIDED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="certifier", description=settings.PROJECT_NAME)
    parser.add_argument("--debug", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    certify = commands.add_parser("certify", help="certify observed correlators")
    certify.add_argument("request")
    certify.add_argument("--mu", type=int, default=None, help="hierarchy level (overrides the request)")
    certify.add_argument("--tol", type=float, default=settings.NONLOCALITY_TOLERANCE)
    certify.add_argument("--threads", type=int, default=settings.DEFAULT_THREADS)
    certify.add_argument("--output", "-o", default=None)
    certify.set_defaults(handler=cmd_certify)

    scan = commands.add_parser("scan", help="scan the relaxation boundary in a plane")
    scan.add_argument("plane")
    scan.add_argument("--N", type=int, required=True)
    scan.add_argument("--mu", type=int, default=1)
    scan.add_argument("--rays", type=int, default=settings.DEFAULT_RAYS)
    scan.add_argument("--threads", type=int, default=settings.DEFAULT_THREADS)
    scan.add_argument("--shared", action="store_true", help="tie all multiplier blocks")
    scan.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    scan.add_argument("--output", "-o", default=None)
    scan.set_defaults(handler=cmd_scan)

    hull = commands.add_parser("hull", help="polytope polygon in a plane")
    hull.add_argument("plane")
    hull.add_argument("--N", type=int, required=True)
    hull.add_argument("--rays", type=int, default=settings.DEFAULT_RAYS)
    hull.add_argument("--threads", type=int, default=settings.DEFAULT_THREADS)
    hull.add_argument("--output", "-o", default=None)
    hull.set_defaults(handler=cmd_hull)

    bound = commands.add_parser("bound", help="classical bound of an inequality")
    bound.add_argument("inequality")
    bound.add_argument("--N", type=int, required=True)
    bound.add_argument("--threads", type=int, default=settings.DEFAULT_THREADS)
    bound.add_argument("--output", "-o", default=None)
    bound.set_defaults(handler=cmd_bound)

    export = commands.add_parser("export", help="write the SDP in sparse SDPA format")
    export.add_argument("request")
    export.add_argument("--mu", type=int, default=None)
    export.add_argument("--output", "-o", default=None)
    export.set_defaults(handler=cmd_export)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    # runs are configured by flags alone
    reset_to_defaults(settings)
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(settings.model_copy(update={"DEBUG": True}) if args.debug else settings)
    try:
        return args.handler(args)
    except CertifierException as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_ERROR
    except PydanticValidationError as exc:
        messages = "; ".join(err.get("msg", "invalid value") for err in exc.errors())
        print(f"error: {messages}", file=sys.stderr)
        return EXIT_ERROR
    except (json.JSONDecodeError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
