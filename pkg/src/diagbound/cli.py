"""Command-line driver.

A thin client over the HTTP service: each command builds a request from the
input files, runs it against an in-process application instance (or a remote
server when --server is given), and writes the response document.

Exit codes: 0 success / converged, 1 containment violations (compare),
2 invalid input or oracle too large, 3 search stopped at the node cap.
"""

from __future__ import annotations

import json
import sys

import click

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INVALID = 2
EXIT_NODE_CAP = 3


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        resp = self._client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": resp.text}
        return resp.status_code, body


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        click.echo(f"error: cannot read {path}: {e}", err=True)
        sys.exit(EXIT_INVALID)


def _fail(status: int, body: dict) -> None:
    detail = body.get("detail", body)
    if isinstance(detail, list):
        for item in detail:
            if isinstance(item, dict) and "location" in item:
                click.echo(f"error: {item['location']}: {item['message']}", err=True)
            else:
                click.echo(f"error: {item}", err=True)
    else:
        click.echo(f"error: {detail}", err=True)
    sys.exit(EXIT_INVALID)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _emit_tabular(doc: dict, out: str | None) -> None:
    lines = ["# kind\tquery\tprior_or_log_r\tlbp\tbest\tubp\tflag"]
    for row in doc.get("ranked", []):
        name = "+".join(row["diseases"]) or "(none)"
        lines.append(
            f"hypothesis\t{name}\t{row['log_r']:.12g}\t{row['lbp']:.12g}"
            f"\t{row['best']:.12g}\t{row['ubp']:.12g}\t"
        )
    for row in doc.get("marginals", []):
        flag = "factored" if row.get("factored") else ""
        lines.append(
            f"marginal\t{row['disease']}\t{row['prior']:.12g}\t{row['lbp']:.12g}"
            f"\t{row['best']:.12g}\t{row['ubp']:.12g}\t{flag}"
        )
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _write_trace(doc: dict, path: str) -> None:
    lines = ["# expansions\tnodes\tsettled\tlog_lbr_total\tlog_ubr_total\ttotal_error\twall_ms"]
    for t in doc.get("trace", []):
        lines.append(
            f"{t['expansions']}\t{t['nodes']}\t{t['settled']}\t{t['log_lbr_total']:.12g}"
            f"\t{t['log_ubr_total']:.12g}\t{t['total_error']:.12g}\t{t['wall_ms']:.3f}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


server_option = click.option("--server", default=None, help="Remote service URL (default: in-process).")
format_option = click.option(
    "--format", "fmt", type=click.Choice(["document", "tabular"]), default="document"
)


@click.group()
def main():
    """Certified posterior bounds for bipartite noisy-OR diagnosis networks."""


@main.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("case_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--pmin", type=float, default=1e-5, show_default=True, help="Relative precision target.")
@click.option("--max-hyps", type=int, default=30000, show_default=True, help="Hypothesis-tree node cap.")
@click.option("--top", type=int, default=10, show_default=True, help="Ranked hypotheses to report.")
@click.option("--trace-every", type=int, default=30, show_default=True, help="Expansions between trace rows.")
@click.option("--trace-out", type=click.Path(dir_okay=False), default=None, help="Write the convergence trace here.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the result document here.")
@format_option
@server_option
def solve(network_file, case_file, pmin, max_hyps, top, trace_every, trace_out, out, fmt, server):
    """Bounded anytime inference on one case."""
    client = ServiceClient(server)
    status, body = client.post(
        "/solve",
        {
            "network": _read_json(network_file),
            "case": _read_json(case_file),
            "options": {
                "p_min": pmin,
                "max_hypotheses": max_hyps,
                "top_n": top,
                "trace_every": trace_every,
            },
        },
    )
    if status != 200:
        _fail(status, body)
    if trace_out:
        _write_trace(body, trace_out)
    if fmt == "tabular":
        _emit_tabular(body, out)
    else:
        _emit(body, out)
    sys.exit(EXIT_NODE_CAP if body["termination"] == "node_cap" else EXIT_OK)


@main.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("case_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--top", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@format_option
@server_option
def exact(network_file, case_file, top, out, fmt, server):
    """Exact posteriors by full enumeration (guarded to desk scale)."""
    client = ServiceClient(server)
    status, body = client.post(
        "/exact",
        {"network": _read_json(network_file), "case": _read_json(case_file), "top_n": top},
    )
    if status != 200:
        _fail(status, body)
    if fmt == "tabular":
        doc = dict(body)
        doc["marginals"] = [
            {"disease": m["disease"], "prior": m["prior"], "lbp": m["posterior"],
             "best": m["posterior"], "ubp": m["posterior"], "factored": False}
            for m in body["marginals"]
        ]
        _emit_tabular(doc, out)
    else:
        _emit(body, out)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("case_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--pmin", type=float, default=1e-5, show_default=True)
@click.option("--max-hyps", type=int, default=30000, show_default=True)
@click.option("--top", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@server_option
def compare(network_file, case_file, pmin, max_hyps, top, out, server):
    """Bounded search against the exact oracle; nonzero exit on any containment violation."""
    client = ServiceClient(server)
    status, body = client.post(
        "/compare",
        {
            "network": _read_json(network_file),
            "case": _read_json(case_file),
            "options": {"p_min": pmin, "max_hypotheses": max_hyps, "top_n": top},
        },
    )
    if status != 200:
        _fail(status, body)
    _emit(body, out)
    if body["violations"]:
        click.echo(f"containment violations: {body['violations']}", err=True)
        sys.exit(EXIT_VIOLATIONS)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("network_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--check",
    "checks",
    type=click.Choice(["pos", "nps2", "npsn", "mep"]),
    multiple=True,
    help="Which property checkers to run (default: pos nps2 npsn).",
)
@click.option("--case", "case_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Case file; required for the mep check.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@server_option
def check(network_file, checks, case_file, out, server):
    """Qualitative property checks with counterexample witnesses."""
    client = ServiceClient(server)
    payload = {"network": _read_json(network_file)}
    if checks:
        payload["checks"] = list(checks)
    if case_file:
        payload["case"] = _read_json(case_file)
    status, body = client.post("/check", payload)
    if status != 200:
        _fail(status, body)
    _emit(body, out)
    for row in body["results"]:
        where = f" {row['finding']}" if row.get("finding") else ""
        verdict = "pass" if row["passed"] else f"FAIL witness={row.get('witness')}"
        click.echo(f"{row['check']}{where}: {verdict}", err=True)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--diseases", type=int, default=50, show_default=True)
@click.option("--findings", type=int, default=100, show_default=True)
@click.option("--mean-links", type=float, default=4.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["noisy-or-leaky", "tabular-nps"]), default="noisy-or-leaky")
@click.option("--prior-range", nargs=2, type=float, default=(0.001, 0.1), show_default=True)
@click.option("--strength-range", nargs=2, type=float, default=(0.2, 0.95), show_default=True)
@click.option("--leak-range", nargs=2, type=float, default=(0.005, 0.05), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Network file to write.")
@click.option("--case-out", type=click.Path(dir_okay=False), default=None, help="Also sample a case and write it here.")
@click.option("--case-seed", type=int, default=0, show_default=True)
@click.option("--n-negative", type=int, default=0, show_default=True)
@server_option
def generate(diseases, findings, mean_links, seed, mode, prior_range, strength_range,
             leak_range, out, case_out, case_seed, n_negative, server):
    """Deterministic synthetic network (and optionally a sampled case)."""
    client = ServiceClient(server)
    status, body = client.post(
        "/generate",
        {
            "seed": seed,
            "n_diseases": diseases,
            "n_findings": findings,
            "mean_links": mean_links,
            "prior_range": list(prior_range),
            "strength_range": list(strength_range),
            "leak_range": list(leak_range),
            "mode": mode,
            "sample_case": case_out is not None,
            "case_seed": case_seed,
            "n_negative": n_negative,
        },
    )
    if status != 200:
        _fail(status, body)
    if out:
        _emit(body["network"], out)
    else:
        _emit(body["network"], None)
    if case_out:
        _emit(body["case"], case_out)
        click.echo(f"true diseases: {' '.join(body.get('true_diseases') or []) or '(none)'}", err=True)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
