"""``trustmesh`` command line.

Exit codes: 0 success, 1 domain negative or domain error, 2 usage or document
error, 3 store / IO error. Output is JSON unless ``--human`` is given.
"""
from __future__ import annotations

import functools
import json
import sys

import click

from .dataspace import interop_check
from .documents import parse_profile_document
from .equivalence import MODES, equivalence_report
from .errors import (
    DocumentSyntaxError,
    MissingDataspaceExtension,
    SchemaError,
    StorageError,
    TrustMeshError,
    UnknownEcosystem,
)
from .fragility import (
    DirectMutualRelation,
    EquivV2Relation,
    ForeignTrustRelation,
    WithdrawalEvent,
    fragility_check,
    withdrawal_impact,
)
from .model import TrustProposition, validate_profile
from .relations import foreign_trust, trust_realm
from .store import RegistryStore, STORE_ENV, default_store_dir

EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_STORE = 3


def _render_human(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key, value in obj.items():
            if isinstance(value, (dict, list)) and value:
                lines.append(f"{pad}{key}:")
                lines.extend(_render_human(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(value)}")
    elif isinstance(obj, list):
        if obj and all(isinstance(row, dict) for row in obj):
            cols = list(dict.fromkeys(k for row in obj for k in row))
            cells = [[_scalar(row.get(c, "")) for c in cols] for row in obj]
            widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
            lines.append(pad + "  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip())
            for r in cells:
                lines.append(pad + "  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        else:
            lines.extend(f"{pad}- {_scalar(v)}" for v in obj)
    else:
        lines.append(pad + _scalar(obj))
    return lines


def _scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "-"
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, ensure_ascii=False)
    return str(value)


def emit(ctx: click.Context, payload) -> None:
    if ctx.obj["human"]:
        click.echo("\n".join(_render_human(payload)))
    else:
        click.echo(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))


def _set_human(ctx: click.Context, param, value):
    if value:
        ctx.find_object(dict)["human"] = True
    return value


def handle_errors(fn):
    """Map library exceptions to exit codes; also accepts ``--human`` after the command."""
    fn = click.option(
        "--human", "_human", is_flag=True, expose_value=False, callback=_set_human, help="Render tables instead of JSON."
    )(fn)

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SchemaError, DocumentSyntaxError) as exc:
            click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
            sys.exit(EXIT_USAGE)
        except StorageError as exc:
            click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
            sys.exit(EXIT_STORE)
        except OSError as exc:
            click.echo(json.dumps({"code": "IOError", "message": str(exc), "details": {}}), err=True)
            sys.exit(EXIT_STORE)
        except TrustMeshError as exc:
            click.echo(json.dumps(exc.to_dict(), sort_keys=True), err=True)
            sys.exit(EXIT_NEGATIVE)

    return wrapper


def _store(ctx: click.Context, readonly: bool = True) -> RegistryStore:
    return RegistryStore(ctx.obj["store_dir"], readonly=readonly)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--store",
    "store_dir",
    type=click.Path(file_okay=False),
    envvar=STORE_ENV,
    default=None,
    help=f"Store directory (default: ${STORE_ENV} or ./.trustmesh).",
)
@click.option("--human", is_flag=True, help="Render tables instead of JSON.")
@click.pass_context
def cli(ctx, store_dir, human):
    """Ecosystem trust profiles and the meta-registry."""
    ctx.ensure_object(dict)
    ctx.obj["store_dir"] = store_dir or str(default_store_dir())
    ctx.obj["human"] = human


def _read_source(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


@cli.command()
@click.argument("files", nargs=-1, required=True)
@click.pass_context
@handle_errors
def ingest(ctx, files):
    """Publish profile documents (``-`` reads stdin)."""
    docs = [parse_profile_document(_read_source(f)) for f in files]
    store = _store(ctx, readonly=False)
    results = []
    snap = store.snapshot()
    for doc in docs:
        snap, created = store.ingest_with_status(doc)
        results.append({"ecoID": doc.ecoID, "created": created})
    emit(ctx, {"sequence": snap.sequence, "ingested": results})


@cli.command()
@click.argument("file")
@click.pass_context
@handle_errors
def validate(ctx, file):
    """Check a profile document without storing it."""
    doc = parse_profile_document(_read_source(file))
    report = validate_profile(doc.to_profile(), [p.proposition() for p in doc.trustPropositions])
    emit(ctx, {"ecoID": doc.ecoID, **report.to_dict()})
    if not report.ok:
        sys.exit(EXIT_USAGE)


@cli.command("list")
@click.pass_context
@handle_errors
def list_(ctx):
    """List known ecosystems."""
    snap = _store(ctx).snapshot()
    emit(ctx, {"sequence": snap.sequence, "ecosystems": snap.universe.eco_ids})


@cli.command()
@click.argument("eco_id")
@click.pass_context
@handle_errors
def show(ctx, eco_id):
    """Print the canonical document of one ecosystem."""
    snap = _store(ctx).snapshot()
    emit(ctx, {"sequence": snap.sequence, "document": snap.document(eco_id)})


@cli.command()
@click.option("--from", "trustor", required=True)
@click.option("--to", "trustee", required=True)
@click.option("--scope", required=True)
@click.option("--assert", "assert_", is_flag=True, help="Exit 1 when the relation does not hold.")
@click.pass_context
@handle_errors
def trusts(ctx, trustor, trustee, scope, assert_):
    """Does TRUSTOR trust the foreign ecosystem TRUSTEE for SCOPE?"""
    snap = _store(ctx).snapshot()
    result = foreign_trust(snap.universe[trustor], snap.universe[trustee], scope)
    emit(
        ctx,
        {
            "sequence": snap.sequence,
            "trustor": trustor,
            "trustee": trustee,
            "scope": scope,
            "trusts": result.trusts,
            "witnesses": [w.to_dict() for w in result.witnesses],
        },
    )
    if assert_ and not result.trusts:
        sys.exit(EXIT_NEGATIVE)


@cli.command()
@click.option("--scope", required=True)
@click.pass_context
@handle_errors
def realm(ctx, scope):
    """Ecosystems accepting anything for SCOPE."""
    snap = _store(ctx).snapshot()
    emit(ctx, {"sequence": snap.sequence, "scope": scope, "ecosystems": sorted(trust_realm(snap.universe, scope))})


@cli.command()
@click.option("--scope", default=None)
@click.option("--mode", type=click.Choice(MODES), default="v2", show_default=True)
@click.pass_context
@handle_errors
def equiv(ctx, scope, mode):
    """Credential equivalence catalog."""
    snap = _store(ctx).snapshot()
    emit(ctx, {"sequence": snap.sequence, **equivalence_report(snap.universe, mode, scope).to_dict()})


@cli.command()
@click.argument("a")
@click.argument("b")
@click.option("--assert", "assert_", is_flag=True, help="Exit 1 when not interoperable.")
@click.pass_context
@handle_errors
def interop(ctx, a, b, assert_):
    """Interoperability of two data spaces."""
    snap = _store(ctx).snapshot()
    spaces = []
    for eco_id in (a, b):
        if eco_id not in snap.universe:
            raise UnknownEcosystem(eco_id)
        if eco_id not in snap.dataspaces:
            raise MissingDataspaceExtension(f"{eco_id!r} has no data-space extension", eco_id=eco_id)
        spaces.append(snap.dataspaces[eco_id])
    report = interop_check(*spaces)
    emit(ctx, {"sequence": snap.sequence, "a": a, "b": b, **report.to_dict()})
    if assert_ and not report.interoperable:
        sys.exit(EXIT_NEGATIVE)


def _proposition_options(fn):
    fn = click.option("--credential", required=True)(fn)
    fn = click.option("--tsp", required=True)(fn)
    fn = click.option("--scope", required=True)(fn)
    return fn


@cli.command()
@click.option("--eco", "eco_id", required=True)
@_proposition_options
@click.option("--dry-run", is_flag=True, help="Report the impact without writing.")
@click.pass_context
@handle_errors
def withdraw(ctx, eco_id, scope, tsp, credential, dry_run):
    """Withdraw one trust proposition from an ecosystem's profile."""
    t = TrustProposition(scope, tsp, credential)
    store = _store(ctx, readonly=dry_run)
    snap = store.snapshot()
    impact = withdrawal_impact(snap.universe, WithdrawalEvent(eco_id, t))
    if not dry_run:
        snap = store.apply_withdrawal(eco_id, t)
    emit(ctx, {"sequence": snap.sequence, "committed": not dry_run, "impact": impact.to_dict()})


@cli.command()
@click.option("--trustor", required=True)
@click.option("--trustee", required=True)
@click.option(
    "--relation",
    type=click.Choice(["foreign-trust", "direct-mutual", "equiv-v2"]),
    default="foreign-trust",
    show_default=True,
)
@click.option("--scope", default=None)
@click.option("--c1", default=None)
@click.option("--c2", default=None)
@click.option("--dry-run/--commit", default=True, show_default=True)
@click.option("--jsonl", is_flag=True, help="Print the trace as one JSON record per step.")
@click.pass_context
@handle_errors
def fragility(ctx, trustor, trustee, relation, scope, c1, c2, dry_run, jsonl):
    """Break a holding trust relation by withdrawing its witnesses from the trustee."""
    if relation == "foreign-trust":
        if not scope:
            raise click.UsageError("--scope is required for foreign-trust")
        rel = ForeignTrustRelation(scope)
    elif relation == "direct-mutual":
        rel = DirectMutualRelation()
    else:
        if not (scope and c1 and c2):
            raise click.UsageError("--scope, --c1 and --c2 are required for equiv-v2")
        rel = EquivV2Relation(scope, c1, c2)

    store = _store(ctx, readonly=dry_run)
    snap = store.snapshot()
    trace = fragility_check(snap.universe, trustor, trustee, rel, first_sequence=snap.sequence + 1)
    if not dry_run:
        for event in trace.events:
            snap = store.apply_withdrawal(event.eco_id, event.proposition)
    if jsonl:
        click.echo(trace.to_jsonl(), nl=False)
        return
    emit(ctx, {"sequence": snap.sequence, "committed": not dry_run, **trace.to_dict()})


@cli.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
@handle_errors
def serve(ctx, port, host):
    """Run the meta-registry HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(_store(ctx, readonly=False)), host=host, port=port)


def main(argv=None):
    cli.main(args=argv, prog_name="trustmesh")


if __name__ == "__main__":
    main()
