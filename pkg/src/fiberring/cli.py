"""Command-line front end.

Subcommands: couplings, validate, protocol, sweep. Machine-readable CSV
goes to stdout (or --out); a human-readable summary goes to stderr.
Exit codes: 0 success (warnings allowed), 1 validation failure, 2
usage/parse error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import io
import math
import sys
import warnings

import numpy as np
import scipy.sparse.linalg

from .config import (
    ConfigError,
    ConfigParseError,
    NetworkConfig,
    load_config,
    validate_config,
)
from .dynamics import decoherence_estimate, excitation_probabilities
from .effective import EffectiveTheoryError, coupling_table
from . import protocols as proto

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2

PROTOCOLS = ("entangle", "transfer", "parallel", "cluster", "xy")


class UsageError(ValueError):
    """Bad invocation that argparse itself cannot catch (exit code 2)."""


def _fmt(x) -> str:
    """Full-precision scientific notation for CSV fields."""
    if x is None:
        return ""
    if isinstance(x, complex):
        return f"{x.real:.17e}{x.imag:+.17e}j"
    return f"{float(x):.17e}"


def _write_csv(rows: list[list], header: list[str], out_path: str | None) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(
            ",".join(
                s if isinstance(s, str) else str(s) if isinstance(s, (int, np.integer)) else _fmt(s)
                for s in row
            )
            + "\n"
        )
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _summary(lines: dict) -> None:
    for key, val in lines.items():
        if isinstance(val, float):
            val = f"{val:.6g}"
        print(f"{key}: {val}", file=sys.stderr)


def _load(args) -> NetworkConfig:
    if not args.config:
        raise UsageError("this command needs --config PATH")
    cfg = load_config(args.config)
    if getattr(args, "cutoff", None):
        cfg = dataclasses.replace(cfg, photon_cutoff=args.cutoff)
    return cfg


def _infer_pair(config: NetworkConfig) -> tuple[int, int]:
    atoms = sorted({d.atom for d in config.active_drives()})
    if len(atoms) != 2:
        raise UsageError("cannot infer the pair (need exactly two driven atoms); pass --pair P Q")
    return atoms[0], atoms[1]


def _parse_pairs(text: str, n: int) -> list[tuple[int, int]]:
    pairs = []
    try:
        for chunk in text.split(","):
            p, q = chunk.split("-")
            pairs.append((int(p), int(q)))
    except ValueError as exc:
        raise UsageError(f"cannot parse --pairs {text!r}; expected e.g. 1-2,3-4") from exc
    for p, q in pairs:
        if not (1 <= p <= n and 1 <= q <= n) or p == q:
            raise UsageError(f"pair ({p},{q}) out of range for n = {n}")
    return pairs


def _expected_state(h_static, psi0: np.ndarray, t: float) -> np.ndarray:
    """Exact evolution under a static effective Hamiltonian (oracle for the
    integration-fidelity column; trivially psi0 at t = 0)."""
    if t == 0:
        return psi0.copy()
    return scipy.sparse.linalg.expm_multiply(-1j * t * h_static.tocsc(), psi0)


def cmd_couplings(args) -> int:
    config = _load(args)
    table = coupling_table(config)
    coeffs = table.coeffs
    n = config.n
    rows: list[list] = []
    for k in range(2 * n):
        rows.append(["omega", k + 1, "", "", "", "", coeffs.omega[k], 0.0])
        rows.append(["xi", k + 1, "", "", "", "", coeffs.xi[k], 0.0])
    for l in range(n):
        rows.append(["epsilon", "", l + 1, "", "", "", table.epsilon[l], 0.0])
        for d in range(2):
            if not coeffs.active[l, d]:
                continue
            rows.append(["eta", "", l + 1, "", d + 1, "", coeffs.eta[l, d], 0.0])
            for k in range(2 * n):
                rows.append(["lambda", k + 1, l + 1, "", d + 1, "", coeffs.lam[k, l, d], 0.0])
                rows.append(["delta", k + 1, l + 1, "", d + 1, "", coeffs.delta[k, l, d], 0.0])
                rows.append(["mu", k + 1, l + 1, "", d + 1, "", coeffs.mu[k, l, d], 0.0])
    for l in range(n):
        for m in range(n):
            if l == m:
                continue
            for d in range(2):
                for dp in range(2):
                    if not (coeffs.active[l, d] and coeffs.active[m, dp]):
                        continue
                    val = table.chi_dd[l, m, d, dp]
                    rows.append(["chi", "", l + 1, m + 1, d + 1, dp + 1, val.real, val.imag])
    _write_csv(rows, ["quantity", "k", "l", "m", "d", "dp", "value_re", "value_im"], args.out)

    active_pairs = [
        (l + 1, m + 1, table.chi[l, m])
        for l in range(n)
        for m in range(l + 1, n)
        if table.chi[l, m] != 0
    ]
    _summary(
        {
            "n": n,
            "epsilon": np.array2string(table.epsilon, precision=6),
            "nonzero chi(l,m) [slot 1]": "; ".join(
                f"({l},{m}) = {abs(c):.6g} (|chi|)" for l, m, c in active_pairs
            )
            or "none",
        }
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = validate_config(config)
    rows = [[name, ratio] for name, ratio in sorted(report.ratios.items())]
    rows += [[name, ratio] for name, ratio in sorted(report.stark_ratios.items())]
    _write_csv(rows, ["ratio", "value"], args.out)
    _summary(
        {
            "min scale-separation ratio": report.min_ratio,
            "min Raman ratio (delta/lambda)": report.min_raman_ratio,
            "warnings": len(report.warnings),
            "ok": report.ok,
        }
    )
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _run_protocol(config: NetworkConfig, args) -> tuple[dict, list[list], list[str]]:
    """Run one protocol; returns (summary metrics, CSV rows, CSV header)."""
    name = args.protocol_name
    model = args.model
    dt = args.dt
    stride = args.record_every
    p1, p2 = excitation_probabilities(config) if config is not None else (0.0, 0.0)

    def series(record, leaks_from=None):
        rows = []
        leaks = record.leaks if record.leaks is not None else (
            leaks_from.leaks if leaks_from is not None else None
        )
        for i, t in enumerate(record.times):
            leak = leaks[i] if leaks is not None and i < len(leaks) else None
            rows.append([t, record.norms[i], leak])
        return rows, ["time", "norm", "leak"]

    if name in ("entangle", "transfer"):
        pair = tuple(args.pair) if args.pair else _infer_pair(config)
        common = dict(
            model=model, dt=dt, record_every=stride,
            allow_large=args.allow_large, t_end=args.t_end,
        )
        if name == "entangle":
            input_state = None
            rep = proto.protocol_entangle(config, *pair, **common)
        else:
            try:
                alpha, beta = (complex(x) for x in args.input.split(","))
            except ValueError as exc:
                raise UsageError(f"cannot parse --input {args.input!r}") from exc
            input_state = (alpha, beta)
            rep = proto.protocol_transfer(config, *pair, input_state, **common)
        t_end = args.t_end if args.t_end is not None else rep.gate_time
        tag = "full" if "full" in rep.records else "effective"
        record = rep.records[tag]
        rows, header = series(record)
        gamma_e, kappa_e, decay = decoherence_estimate(config, p1, p2, t_end)
        metrics = {
            "protocol": name,
            "pair": f"{pair[0]}-{pair[1]}",
            "chi_abs": abs(rep.chi),
            "gate_time": rep.gate_time,
            "t_end": t_end,
            "p1": p1,
            "p2": p2,
            "gamma_e": gamma_e,
            "kappa_e": kappa_e,
            "fidelity_estimate": decay,
            "fidelity": _integration_fidelity(config, rep, pair, input_state, t_end),
        }
        if name == "entangle":
            for tag2, val in rep.concurrence.items():
                metrics[f"concurrence_{tag2}"] = val
            for tag2, val in rep.bell_fidelity.items():
                metrics[f"bell_fidelity_{tag2}"] = val
        else:
            for tag2, val in rep.fidelity.items():
                metrics[f"transfer_fidelity_{tag2}"] = val
        if rep.leak is not None:
            metrics["leak"] = rep.leak
        return metrics, rows, header

    if name == "parallel":
        if not args.pairs:
            raise UsageError("parallel needs --pairs, e.g. --pairs 1-2,3-4")
        pairs = _parse_pairs(args.pairs, config.n)
        rep = proto.protocol_parallel(
            config, pairs, model=model, t_end=args.t_end, dt=dt,
            record_every=stride, allow_large=args.allow_large,
        )
        tag = "full" if "full" in rep.records else "effective"
        rows, header = series(rep.records[tag])
        metrics = {"protocol": name, "t_end": rep.gate_time, "crosstalk": rep.crosstalk}
        for pq, f in rep.pair_fidelity.items():
            metrics[f"pair_fidelity_{pq[0]}-{pq[1]}"] = f
        return metrics, rows, header

    if name == "cluster":
        if args.config:
            rep = proto.protocol_cluster(config=config, dt=dt, record_every=stride)
        else:
            rep = proto.protocol_cluster(n=args.n, chi=args.chi, epsilon=args.epsilon, dt=dt, record_every=stride)
        rows, header = series(rep.record)
        metrics = {
            "protocol": name,
            "n": rep.n,
            "chi": rep.chi,
            "epsilon": rep.epsilon,
            "gate_time": rep.gate_time,
            "stabilizer_min": float(np.min(rep.stabilizers)),
            "cluster_fidelity": rep.fidelity,
            "fidelity": rep.fidelity,
        }
        for l, s in enumerate(rep.stabilizers, start=1):
            metrics[f"stabilizer_{l}"] = float(s)
        return metrics, rows, header

    if name == "xy":
        t_end = args.t_end if args.t_end is not None else 1.0
        if args.config:
            n = config.n
            initial = args.initial or ("e" + "g" * (n - 1))
            rep = proto.protocol_xy_quench(config, initial, t_end, dt=dt, record_every=stride)
        else:
            if not args.n:
                raise UsageError("xy without --config needs --n (and optionally --chi/--epsilon)")
            n = args.n
            initial = args.initial or ("e" + "g" * (n - 1))
            rep = proto.protocol_xy_quench(
                None, initial, t_end, n=n, chi=args.chi, epsilon=args.epsilon,
                dt=dt, record_every=stride,
            )
        header = ["time", "norm", "leak"] + [f"pop_{l}" for l in range(1, n + 1)]
        rows = []
        for i, t in enumerate(rep.times):
            rows.append([t, rep.record.norms[i], None] + list(rep.populations[i]))
        metrics = {
            "protocol": name,
            "initial": initial,
            "t_end": t_end,
            "total_excitation_final": float(rep.total_excitation[-1]),
            "max_transfer": float(np.max(rep.populations[:, 1:])) if n > 1 else 0.0,
        }
        return metrics, rows, header

    raise UsageError(f"unknown protocol {name!r}")


def _integration_fidelity(config: NetworkConfig, rep, pair, input_state, t_end) -> float:
    """Overlap of the integrated effective state with the exact matrix
    exponential at t_end; a pure integration-accuracy diagnostic (1 at t=0)."""
    from .effective import build_effective_pair
    from .operators import QubitLayout, qubit_basis_state

    psi_final = getattr(rep, "final_states", {}).get("effective")
    if psi_final is None:
        return float("nan")
    layout = QubitLayout(config.n)
    labels = ["g"] * config.n
    if input_state is None:
        labels[pair[0] - 1] = "e"
        psi0 = qubit_basis_state(layout, "".join(labels))
    else:
        alpha, beta = np.asarray(input_state, dtype=complex)
        norm = abs(complex(alpha)) ** 2 + abs(complex(beta)) ** 2
        alpha, beta = alpha / math.sqrt(norm), beta / math.sqrt(norm)
        psi0 = alpha * qubit_basis_state(layout, "".join(labels))
        labels[pair[0] - 1] = "e"
        psi0 = psi0 + beta * qubit_basis_state(layout, "".join(labels))
    h = build_effective_pair(config, *pair)
    expected = _expected_state(h, psi0, t_end)
    return float(abs(np.vdot(expected, psi_final)) ** 2)


def cmd_protocol(args) -> int:
    config = _load(args) if args.config else None
    if args.protocol_name not in ("cluster", "xy") and config is None:
        raise UsageError("this protocol needs --config PATH")
    metrics, rows, header = _run_protocol(config, args)
    _write_csv(rows, header, args.out)
    _summary(metrics)
    return EXIT_OK


SWEEPABLE = ("nu", "delta2", "gamma", "kappa")  # plus rabi[l] / detuning[l]


def _apply_param(config: NetworkConfig, param: str, value: float) -> NetworkConfig:
    if param in SWEEPABLE:
        return dataclasses.replace(config, **{param: value})
    for kind in ("rabi", "detuning"):
        if param.startswith(kind + "[") and param.endswith("]"):
            try:
                atom = int(param[len(kind) + 1 : -1])
            except ValueError as exc:
                raise UsageError(f"bad sweep parameter {param!r}") from exc
            if not any(d.atom == atom for d in config.drives):
                raise UsageError(f"no drive on atom {atom} to sweep")
            new_drives = [
                dataclasses.replace(d, **{kind: value}) if d.atom == atom else d
                for d in config.drives
            ]
            return config.with_drives(new_drives)
    raise UsageError(
        f"unknown sweep parameter {param!r}; expected one of {SWEEPABLE} or rabi[l]/detuning[l]"
    )


def _sweep_point(payload) -> dict:
    config_dict, param, value, args_dict = payload
    from .config import config_from_dict

    config = _apply_param(config_from_dict(config_dict), param, value)
    ns = argparse.Namespace(**args_dict)
    metrics, _, _ = _run_protocol(config, ns)
    metrics["value"] = value
    return metrics


def cmd_sweep(args) -> int:
    config = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"cannot parse --values {args.values!r}") from exc
    if not values:
        raise UsageError("empty sweep range")
    _apply_param(config, args.param, values[0])  # fail fast on a bad parameter

    from .config import config_to_dict

    args_dict = dict(vars(args))
    args_dict["protocol_name"] = args.protocol
    payloads = [(config_to_dict(config), args.param, v, args_dict) for v in values]
    if args.parallel and len(values) > 1:
        with concurrent.futures.ProcessPoolExecutor() as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(p) for p in payloads]

    keys = ["value"] + [k for k in results[0] if k not in ("value", "protocol", "pair", "initial")]
    rows = [[m.get(k) if not isinstance(m.get(k), str) else m[k] for k in keys] for m in results]
    _write_csv(rows, [args.param if k == "value" else k for k in keys], args.out)
    _summary({"points": len(values), "parameter": args.param, "protocol": args.protocol})
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberring",
        description="Effective-theory calculator and simulator for a fiber-linked atom-cavity ring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", help="JSON config file", required=False)
        p.add_argument("--out", help="write CSV here instead of stdout")

    p_coup = sub.add_parser("couplings", help="print Raman and pair-coupling tables")
    common(p_coup)
    p_coup.set_defaults(func=cmd_couplings)

    p_val = sub.add_parser("validate", help="check scale-separation hierarchies")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_prot = sub.add_parser("protocol", help="run a protocol and emit its time series")
    p_prot.add_argument("protocol_name", choices=PROTOCOLS)
    common(p_prot)
    p_prot.add_argument("--model", choices=("effective", "full", "both"), default="effective")
    p_prot.add_argument("--cutoff", type=int, help="photon cutoff override for full-model runs")
    p_prot.add_argument("--t-end", type=float, default=None, help="override the protocol duration")
    p_prot.add_argument("--dt", type=float, default=None, help="integrator step override")
    p_prot.add_argument("--record-every", type=int, default=0, help="record stride in steps (0: endpoints)")
    p_prot.add_argument("--pair", type=int, nargs=2, metavar=("P", "Q"))
    p_prot.add_argument("--pairs", help="for parallel: e.g. 1-2,3-4")
    p_prot.add_argument("--input", default="0,1", help="transfer input amplitudes alpha,beta")
    p_prot.add_argument("--initial", help="xy initial basis string, e.g. eggg")
    p_prot.add_argument("--n", type=int, help="ring size for direct cluster/xy runs")
    p_prot.add_argument("--chi", type=float, default=1.0, help="direct-mode coupling")
    p_prot.add_argument("--epsilon", type=float, default=0.0, help="direct-mode Stark shift")
    p_prot.add_argument("--allow-large", action="store_true", help="lift the full-model size guard")
    p_prot.set_defaults(func=cmd_protocol)

    p_sw = sub.add_parser("sweep", help="re-run a protocol over a parameter range")
    common(p_sw)
    p_sw.add_argument("--param", required=True, help="nu|delta2|gamma|kappa|rabi[l]|detuning[l]")
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.add_argument("--protocol", choices=PROTOCOLS, default="entangle")
    p_sw.add_argument("--parallel", action="store_true", help="run sweep points in worker processes")
    p_sw.add_argument("--model", choices=("effective", "full", "both"), default="effective")
    p_sw.add_argument("--cutoff", type=int)
    p_sw.add_argument("--t-end", type=float, default=None)
    p_sw.add_argument("--dt", type=float, default=None)
    p_sw.add_argument("--record-every", type=int, default=0)
    p_sw.add_argument("--pair", type=int, nargs=2, metavar=("P", "Q"))
    p_sw.add_argument("--pairs")
    p_sw.add_argument("--input", default="0,1")
    p_sw.add_argument("--initial")
    p_sw.add_argument("--n", type=int)
    p_sw.add_argument("--chi", type=float, default=1.0)
    p_sw.add_argument("--epsilon", type=float, default=0.0)
    p_sw.add_argument("--allow-large", action="store_true")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, EffectiveTheoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
