"""HTTP service exposing the inference engine.

The engine itself is a pure library; this module is the long-running,
multi-client surface.  Payload shapes match the on-disk file formats, so
clients can forward file contents directly.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException

from .. import __version__, compare, netgen, oracle, posteriors, search
from ..model import (
    Evidence,
    InvalidModelError,
    ModelError,
    Network,
    case_from_doc,
    case_to_doc,
    network_from_doc,
    network_to_doc,
    validate_case,
    validate_network,
)
from . import schemas


def _network(model: schemas.NetworkModel) -> Network:
    try:
        return network_from_doc(model.model_dump())
    except ModelError as e:
        raise HTTPException(status_code=422, detail=str(e))


def _case(model: schemas.CaseModel, network: Network) -> Evidence:
    try:
        return case_from_doc(model.model_dump(), network)
    except ModelError as e:
        raise HTTPException(status_code=422, detail=str(e))


def _require_valid(network: Network, evidence: Evidence | None = None) -> None:
    report = validate_network(network)
    if report.ok and evidence is not None:
        report = validate_case(network, evidence)
    if not report.ok:
        raise HTTPException(
            status_code=422,
            detail=[{"location": i.location, "message": i.message} for i in report.issues],
        )


def _config(options: schemas.SolveOptions) -> search.SearchConfig:
    try:
        return search.SearchConfig(
            p_min=options.p_min,
            max_hypotheses=options.max_hypotheses,
            top_n=options.top_n,
            trace_every=options.trace_every,
        ).validated()
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))


def _result_document(
    result: posteriors.InferenceResult, network: Network, options: schemas.SolveOptions
) -> schemas.ResultDocument:
    names = [d.name for d in network.diseases]
    return schemas.ResultDocument(
        options=options,
        termination=result.termination,
        converged=result.converged,
        total_error=result.total_error,
        log_lbr_total=result.log_lbr,
        log_ubr_total=result.log_ubr,
        log_pf_lower=result.log_pf_lower,
        log_pf_upper=result.log_pf_upper,
        ranked=[
            schemas.HypothesisRowModel(
                diseases=[names[d] for d in h.diseases],
                log_r=h.log_r,
                lbp=h.lbp,
                ubp=h.ubp,
                best=h.best,
            )
            for h in result.ranked
        ],
        marginals=[
            schemas.MarginalRowModel(
                disease=m.name,
                prior=m.prior,
                lbp=m.lbp,
                ubp=m.ubp,
                best=m.best,
                factored=m.factored,
            )
            for m in result.marginals
        ],
        factored=[names[d] for d in result.factored],
        log_factor_multiplier=result.log_factor_multiplier,
        counters={
            "nodes_created": result.nodes_created,
            "expansions": result.expansions,
            "settled": result.settled_count,
            "frontier": result.frontier_size,
            "children_gain_above_one": result.children_gain_above_one,
        },
        degraded_absorption=result.degraded_absorption,
        trace=[
            schemas.TraceRowModel(
                expansions=t.expansions,
                nodes=t.nodes,
                settled=t.settled,
                log_lbr_total=t.log_lbr,
                log_ubr_total=t.log_ubr,
                total_error=t.total_error,
                wall_ms=t.wall_ms,
            )
            for t in result.trace
        ],
        wall_ms=result.wall_ms,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="diagbound", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/validate", response_model=schemas.ValidationResponse)
    def validate(req: schemas.ValidateRequest):
        try:
            network = network_from_doc(req.network.model_dump())
        except ModelError as e:
            return schemas.ValidationResponse(
                valid=False, issues=[schemas.ValidationIssueModel(location="document", message=str(e))]
            )
        report = validate_network(network)
        if report.ok and req.case is not None:
            try:
                evidence = case_from_doc(req.case.model_dump(), network)
            except ModelError as e:
                return schemas.ValidationResponse(
                    valid=False,
                    issues=[schemas.ValidationIssueModel(location="case", message=str(e))],
                )
            report = validate_case(network, evidence)
        return schemas.ValidationResponse(
            valid=report.ok,
            issues=[
                schemas.ValidationIssueModel(location=i.location, message=i.message)
                for i in report.issues
            ],
        )

    @app.post("/solve", response_model=schemas.ResultDocument)
    def solve(req: schemas.SolveRequest):
        network = _network(req.network)
        evidence = _case(req.case, network)
        config = _config(req.options)
        try:
            result = search.run(network, evidence, config)
        except InvalidModelError as e:
            raise HTTPException(
                status_code=422,
                detail=[{"location": i.location, "message": i.message} for i in e.report.issues],
            )
        return _result_document(result, network, req.options)

    @app.post("/exact", response_model=schemas.ExactDocument)
    def exact(req: schemas.ExactRequest):
        t0 = time.perf_counter()
        network = _network(req.network)
        evidence = _case(req.case, network)
        _require_valid(network, evidence)
        try:
            ex = oracle.enumerate_exact(network, evidence)
        except oracle.OracleSizeError as e:
            raise HTTPException(status_code=400, detail=str(e))
        names = [d.name for d in network.diseases]
        order = sorted(range(1 << ex.n), key=lambda m: (-ex.log_joint[m], m))
        ranked = []
        for mask in order[: max(req.top_n, 0)]:
            p = ex.posterior(mask)
            ranked.append(
                schemas.HypothesisRowModel(
                    diseases=[names[d] for d in range(ex.n) if mask >> d & 1],
                    log_r=float(ex.log_r[mask]),
                    lbp=p,
                    ubp=p,
                    best=p,
                )
            )
        return schemas.ExactDocument(
            log_pf=ex.log_pf,
            n_hypotheses=1 << ex.n,
            ranked=ranked,
            marginals=[
                schemas.ExactMarginalRowModel(
                    disease=names[d], prior=network.diseases[d].prior, posterior=float(ex.marginals[d])
                )
                for d in range(ex.n)
            ],
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )

    @app.post("/compare", response_model=schemas.CompareDocument)
    def compare_endpoint(req: schemas.CompareRequest):
        t0 = time.perf_counter()
        network = _network(req.network)
        evidence = _case(req.case, network)
        config = _config(req.options)
        try:
            report = compare.compare_case(network, evidence, config)
        except InvalidModelError as e:
            raise HTTPException(
                status_code=422,
                detail=[{"location": i.location, "message": i.message} for i in e.report.issues],
            )
        except oracle.OracleSizeError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return schemas.CompareDocument(
            rows=[
                schemas.CompareRowModel(
                    query=r.query,
                    kind=r.kind,
                    exact=r.exact,
                    lbp=r.lbp,
                    ubp=r.ubp,
                    best=r.best,
                    abs_best_err=r.abs_best_err,
                    contained=r.contained,
                )
                for r in report.rows
            ],
            violations=report.violations,
            max_abs_best_err=report.max_abs_best_err,
            mean_abs_best_err=report.mean_abs_best_err,
            termination=report.termination,
            total_error=report.total_error,
            containment_tolerance=report.containment_tolerance,
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )

    @app.post("/check", response_model=schemas.CheckDocument)
    def check(req: schemas.CheckRequest):
        t0 = time.perf_counter()
        network = _network(req.network)
        _require_valid(network)
        names = [f.name for f in network.findings]
        rows: list[schemas.CheckRowModel] = []

        per_finding = {
            "pos": oracle.check_positive_influence,
            "nps2": oracle.check_nps_pairwise,
            "npsn": oracle.check_nps_general,
        }
        for kind in req.checks:
            if kind == "mep":
                if req.case is None:
                    raise HTTPException(status_code=422, detail="the mep check needs a case")
                evidence = _case(req.case, network)
                _require_valid(network, evidence)
                try:
                    res = oracle.check_declining_gain(network, evidence)
                except oracle.OracleSizeError as e:
                    raise HTTPException(status_code=400, detail=str(e))
                rows.append(
                    schemas.CheckRowModel(
                        check=res.check,
                        passed=res.passed,
                        witness=None if res.witness is None else repr(res.witness),
                        detail=res.detail,
                    )
                )
                continue
            fn = per_finding[kind]
            for f in range(network.n_findings):
                try:
                    res = fn(network, f)
                except oracle.OracleSizeError as e:
                    rows.append(
                        schemas.CheckRowModel(
                            check=kind, finding=names[f], passed=False, detail=f"skipped: {e}"
                        )
                    )
                    continue
                rows.append(
                    schemas.CheckRowModel(
                        check=res.check,
                        finding=names[f],
                        passed=res.passed,
                        witness=None if res.witness is None else repr(res.witness),
                        detail=res.detail,
                    )
                )
        return schemas.CheckDocument(
            results=rows,
            all_passed=all(r.passed for r in rows),
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )

    @app.post("/generate", response_model=schemas.GenerateDocument)
    def generate(req: schemas.GenerateRequest):
        spec = netgen.GenSpec(
            seed=req.seed,
            n_diseases=req.n_diseases,
            n_findings=req.n_findings,
            mean_links=req.mean_links,
            prior_range=req.prior_range,
            strength_range=req.strength_range,
            leak_range=req.leak_range,
            mode=req.mode,
        )
        try:
            network = netgen.generate(spec)
        except netgen.GenerationError as e:
            raise HTTPException(status_code=400, detail=str(e))
        doc = schemas.GenerateDocument(network=network_to_doc(network))
        if req.sample_case:
            try:
                evidence, true_mask = netgen.sample_case(network, req.case_seed, req.n_negative)
            except netgen.GenerationError as e:
                raise HTTPException(status_code=400, detail=str(e))
            doc.case = case_to_doc(evidence, network)
            doc.true_diseases = [
                network.diseases[d].name
                for d in range(network.n_diseases)
                if true_mask >> d & 1
            ]
        return doc

    return app


app = create_app()
