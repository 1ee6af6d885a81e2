"""Command-line entry point: ``python -m scbicm <command> ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

from scbicm.api.schemas import (
    AssignmentFile,
    EnsembleDescription,
    GraphFile,
    MappingFile,
    ParityCheckFile,
    WorkflowConfig,
    parse_params,
    read_json,
    write_json,
)
from scbicm.config import Config
from scbicm.core.bitmap import (
    INTERNAL_TOL,
    ROW_TOL,
    TABLE_TOL,
    format_grouped_table,
    parse_grouped_table,
    uniform_mapping,
    validate,
)
from scbicm.core.channel import (
    constellation_by_name,
    default_snr_grid,
    erasure_profile,
    load_or_build_profile,
    save_profile,
    shannon_limit_ebn0,
)
from scbicm.core.density_evolution import threshold, threshold_scalar
from scbicm.core.lifting import assign_channels, lift
from scbicm.core.protograph import design_rate
from scbicm.exceptions import InvalidParametersError, ScbicmError
from scbicm.models.bit_mapping import BitMapping
from scbicm.models.results import DEHyperParams, DEOptions, SimConfig
from scbicm.services.optimizer import JointDesigner
from scbicm.services.simulator import run_ber
from scbicm.services.workflows import (
    baseline_graphs,
    fig6_csv,
    format_table2,
    reproduce_fig6,
    reproduce_table2,
)
from scbicm.utils.helpers import configure_logging, parse_sweep

logger = logging.getLogger("scbicm.cli")


def _read_mapping(path: str, m: int = 4) -> BitMapping:
    if path.endswith(".json"):
        return read_json(MappingFile, path).to_mapping()
    with open(path) as handle:
        return parse_grouped_table(handle.read(), m=m)


def _mapping_for(graph, spec: str, m: int) -> BitMapping:
    return uniform_mapping(m, graph.vn_count) if spec == "uniform" else _read_mapping(spec, m)


def _hyper(args, cfg) -> DEHyperParams:
    return DEHyperParams.from_config(
        cfg,
        seed=getattr(args, "seed", None),
        population=getattr(args, "population", None),
        generations=getattr(args, "generations", None),
        screen_top=getattr(args, "screen_top", None),
        workers=getattr(args, "workers", None),
    )


def cmd_channel_profile(args, cfg) -> int:
    constellation = constellation_by_name(args.mod)
    grid = default_snr_grid(args.snr_min, args.snr_max, args.snr_step)
    profile = erasure_profile(constellation, grid)
    save_profile(profile, args.out)
    print(f"profile constellation={profile.constellation} rows={grid.size} out={args.out}")
    return 0


def cmd_ensemble_build(args, cfg) -> int:
    if args.description:
        description = read_json(EnsembleDescription, args.description)
    else:
        params = parse_params(args.params)
        description = EnsembleDescription(
            family=args.family,
            J=params.J, K=params.K, L=params.L, w=params.w,
            connect_positions=[int(p) for p in args.connect_positions.split(",")] if args.connect_positions else None,
            end=args.end,
            start=args.start,
        )
    graph = description.build()
    connection = description.connection.to_spec() if description.connection else None
    write_json(GraphFile.from_protograph(graph, connection), args.out)
    print(
        f"ensemble family={graph.family} chains={graph.num_chains} vns={graph.vn_count} "
        f"cns={graph.cn_count} edges={graph.edge_count} rate={graph.design_rate} "
        f"flags={','.join(graph.flags) or '-'} out={args.out}"
    )
    return 0


def cmd_threshold(args, cfg) -> int:
    graph = read_json(GraphFile, args.graph).to_protograph()
    opts = DEOptions.from_config(cfg)
    if args.scalar_bec:
        result = threshold_scalar(graph, opts)
        print(f"threshold avg_erasure={result.avg_erasure:.5f}")
        return 0
    profile = load_or_build_profile(args.profile)
    mapping = _mapping_for(graph, args.bitmap, profile.m)
    result = threshold(graph, mapping, profile, opts)
    print(
        f"threshold avg_erasure={result.avg_erasure:.5f} snr_db={result.snr_db:.3f} "
        f"ebn0_db={result.ebn0_db:.3f}"
    )
    return 0


def cmd_bitmap_validate(args, cfg) -> int:
    mapping = _read_mapping(args.file, args.m)
    grouped = not args.file.endswith(".json")
    report = validate(
        mapping,
        column_tol=TABLE_TOL if grouped else INTERNAL_TOL,
        row_tol=TABLE_TOL if grouped else ROW_TOL,
    )
    print(f"bitmap m={mapping.m} V={mapping.V} ok={report.ok}")
    for violation in report.violations:
        print(f"violation constraint={violation.constraint} index={violation.index} magnitude={violation.magnitude:.3g}")
    return 0 if report.ok else 3


def cmd_bitmap_expand(args, cfg) -> int:
    with open(args.grouped) as handle:
        mapping = parse_grouped_table(handle.read(), m=args.m)
    write_json(MappingFile.from_mapping(mapping), args.out)
    print(f"bitmap m={mapping.m} V={mapping.V} out={args.out}")
    return 0


def _write_design(result, out_graph: str, out_bitmap: str) -> None:
    write_json(GraphFile.from_protograph(result.graph, result.connection), out_graph)
    write_json(MappingFile.from_mapping(result.mapping), out_bitmap)
    print(
        f"design avg_erasure={result.threshold.avg_erasure:.5f} ebn0_db={result.threshold.ebn0_db:.3f} "
        f"uniform_avg_erasure={result.uniform_threshold.avg_erasure:.5f} rounds={len(result.history)} "
        f"graph={out_graph} bitmap={out_bitmap}"
    )
    print(format_grouped_table(result.mapping), end="")


def cmd_optimize_joint(args, cfg) -> int:
    profile = load_or_build_profile(args.profile)
    designer = JointDesigner(profile, _hyper(args, cfg), DEOptions.from_config(cfg))
    result = designer.joint_design(parse_params(args.params), args.chains)
    _write_design(result, args.out_graph, args.out_bitmap)
    return 0


def cmd_optimize_mapping(args, cfg) -> int:
    profile = load_or_build_profile(args.profile)
    graph = read_json(GraphFile, args.graph).to_protograph()
    designer = JointDesigner(profile, _hyper(args, cfg), DEOptions.from_config(cfg))
    _write_design(designer.optimize_mapping_only(graph), args.out_graph or args.graph, args.out_bitmap)
    return 0


def cmd_lift(args, cfg) -> int:
    graph = read_json(GraphFile, args.graph).to_protograph()
    code = lift(graph, args.Q, args.seed)
    write_json(ParityCheckFile.from_code(code), args.out_code)
    mapping = _mapping_for(graph, args.bitmap, args.m)
    assignment = assign_channels(mapping, args.Q, args.seed)
    write_json(AssignmentFile.from_assignment(assignment), args.out_assign)
    print(
        f"lift n={code.n} checks={code.n_checks} Q={code.Q} rate={code.rate:.4f} "
        f"per_channel={assignment.counts().tolist()} code={args.out_code} assign={args.out_assign}"
    )
    return 0


def cmd_simulate(args, cfg) -> int:
    code = read_json(ParityCheckFile, args.code).to_code()
    assignment = read_json(AssignmentFile, args.assign).to_assignment()
    config = SimConfig(
        ebn0_points=tuple(parse_sweep(args.ebn0)),
        max_frames=args.max_frames,
        target_bit_errors=args.target_errors,
        bp_iters=args.bp_iters,
        seed=args.seed,
        source=args.source,
    )
    records = run_ber(code, assignment, config, constellation_by_name(args.mod))
    print(fig6_csv([("code", r) for r in records]), end="")
    return 0


def _workflow(args) -> WorkflowConfig:
    workflow = read_json(WorkflowConfig, args.config) if args.config else WorkflowConfig()
    overrides = {
        key: getattr(args, key)
        for key in ("seed", "Q", "profile_path", "ebn0", "max_frames")
        if getattr(args, key, None) is not None
    }
    return workflow.model_copy(update=overrides)


def cmd_reproduce_table2(args, cfg) -> int:
    workflow = _workflow(args)
    profile = load_or_build_profile(workflow.profile_path)
    hyper = DEHyperParams.from_config(
        cfg,
        seed=workflow.seed,
        population=workflow.population,
        generations=workflow.generations,
        screen_top=workflow.screen_top,
        workers=workflow.workers,
    )
    params = parse_params(workflow.params)
    rows = reproduce_table2(
        params, profile, hyper, DEOptions.from_config(cfg),
        include_optimized=not args.uniform_only,
    )
    print(format_table2(rows), end="")
    print(f"capacity_limit_ebn0_db={shannon_limit_ebn0(float(design_rate(params)), profile.m, profile):.3f}")
    return 0


def cmd_reproduce_fig6(args, cfg) -> int:
    workflow = _workflow(args)
    if not workflow.designed_graph or not workflow.designed_mapping:
        raise InvalidParametersError(
            "reproduce fig6 needs designed_graph and designed_mapping; run optimize joint first"
        )
    params = parse_params(workflow.params)
    ensembles = {}
    for name, graph in baseline_graphs(params).items():
        ensembles[f"{name} uniform"] = (graph, uniform_mapping(4, graph.vn_count))
    designed = read_json(GraphFile, workflow.designed_graph).to_protograph()
    ensembles["L* designed"] = (designed, _read_mapping(workflow.designed_mapping))
    if workflow.Q >= 2000:
        logger.warning("Q=%d is a full-scale run and may take many hours", workflow.Q)
    config = SimConfig(
        ebn0_points=tuple(parse_sweep(workflow.ebn0)),
        max_frames=workflow.max_frames,
        target_bit_errors=workflow.target_errors,
        bp_iters=workflow.bp_iters,
        seed=workflow.seed,
    )
    text = fig6_csv(reproduce_fig6(ensembles, workflow.Q, config, workflow.seed))
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w") as handle:
            handle.write(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scbicm", description="Connected-chain SC-LDPC design for BICM")
    parser.add_argument("--log-level", default=None, help="override SCBICM_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    channel = commands.add_parser("channel", help="channel profiles").add_subparsers(dest="action", required=True)
    p = channel.add_parser("profile", help="tabulate the equivalent parallel-BEC profile")
    p.add_argument("--mod", default="16qam-gray")
    p.add_argument("--out", default=Config.PROFILE_PATH)
    p.add_argument("--snr-min", type=float, default=Config.SNR_MIN_DB)
    p.add_argument("--snr-max", type=float, default=Config.SNR_MAX_DB)
    p.add_argument("--snr-step", type=float, default=Config.SNR_STEP_DB)
    p.set_defaults(func=cmd_channel_profile)

    ensemble = commands.add_parser("ensemble", help="protograph ensembles").add_subparsers(dest="action", required=True)
    p = ensemble.add_parser("build", help="build a single-chain or connected-chain protograph")
    p.add_argument("--family", choices=["single", "loop", "continuous"], default="single")
    p.add_argument("--params", default="3,6,10,2", help="J,K,L,w")
    p.add_argument("--connect-positions", default=None, help="comma list of chain positions (loop family)")
    p.add_argument("--end", choices=["left", "right"], default="right")
    p.add_argument("--start", type=int, default=5)
    p.add_argument("--description", default=None, help="JSON ensemble description; overrides the flags")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble_build)

    p = commands.add_parser("threshold", help="DE decoding threshold")
    p.add_argument("--graph", required=True)
    p.add_argument("--bitmap", default="uniform")
    p.add_argument("--profile", default=Config.PROFILE_PATH)
    p.add_argument("--scalar-bec", action="store_true")
    p.set_defaults(func=cmd_threshold)

    bitmap = commands.add_parser("bitmap", help="bit mappings").add_subparsers(dest="action", required=True)
    p = bitmap.add_parser("validate")
    p.add_argument("file")
    p.add_argument("--m", type=int, default=4)
    p.set_defaults(func=cmd_bitmap_validate)
    p = bitmap.add_parser("expand")
    p.add_argument("--grouped", required=True)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bitmap_expand)

    optimize = commands.add_parser("optimize", help="design by differential evolution").add_subparsers(
        dest="action", required=True
    )
    for name, func in (("joint", cmd_optimize_joint), ("mapping", cmd_optimize_mapping)):
        p = optimize.add_parser(name)
        if name == "joint":
            p.add_argument("--params", default="3,6,10,2")
            p.add_argument("--chains", type=int, default=2)
            p.add_argument("--out-graph", required=True)
        else:
            p.add_argument("--graph", required=True)
            p.add_argument("--out-graph", default=None)
        p.add_argument("--profile", default=Config.PROFILE_PATH)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--population", type=int, default=None)
        p.add_argument("--generations", type=int, default=None)
        p.add_argument("--screen-top", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out-bitmap", required=True)
        p.set_defaults(func=func)

    p = commands.add_parser("lift", help="lift a protograph and assign bit channels")
    p.add_argument("--graph", required=True)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--seed", type=int, default=Config.SEED)
    p.add_argument("--bitmap", default="uniform")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--out-code", required=True)
    p.add_argument("--out-assign", required=True)
    p.set_defaults(func=cmd_lift)

    p = commands.add_parser("simulate", help="Monte Carlo BER")
    p.add_argument("--code", required=True)
    p.add_argument("--assign", required=True)
    p.add_argument("--ebn0", default="2.0:0.25:4.0")
    p.add_argument("--seed", type=int, default=Config.SEED)
    p.add_argument("--mod", default="16qam-gray")
    p.add_argument("--max-frames", type=int, default=Config.SIM_MAX_FRAMES)
    p.add_argument("--target-errors", type=int, default=Config.SIM_TARGET_ERRORS)
    p.add_argument("--bp-iters", type=int, default=Config.SIM_BP_ITERS)
    p.add_argument("--source", choices=["zero", "encoded"], default="zero")
    p.set_defaults(func=cmd_simulate)

    reproduce = commands.add_parser("reproduce", help="end-to-end workflows").add_subparsers(
        dest="action", required=True
    )
    for name, func in (("table2", cmd_reproduce_table2), ("fig6", cmd_reproduce_fig6)):
        p = reproduce.add_parser(name)
        p.add_argument("--config", default=None, help="JSON workflow config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--profile", dest="profile_path", default=None)
        if name == "table2":
            p.add_argument("--uniform-only", action="store_true")
        else:
            p.add_argument("--Q", type=int, default=None)
            p.add_argument("--ebn0", default=None)
            p.add_argument("--max-frames", type=int, default=None)
            p.add_argument("--out", default=None)
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    cfg = Config.from_env()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or cfg.LOG_LEVEL)
    try:
        return args.func(args, cfg)
    except ScbicmError as err:
        print(f"error category={err.category} message={err.message}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
