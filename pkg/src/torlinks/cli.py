"""Command-line pipelines: generate tuples, build links, certify, export.

Artifacts are JSON with a ``type`` tag and floats written with 17 significant
digits, so encoding is canonical: re-encoding a decoded artifact reproduces
the same bytes, and fixed seeds reproduce identical files.  Matrices are
stored as ``{"n": k, "re": [[...]], "im": [[...]]}`` row-major.  All writes go
through a temp file and an atomic rename.

Exit codes: 0 success / certificate passed, 1 failed certification or
membership, 2 precondition and decode errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .homotopy import (
    Certificate,
    CertTolerances,
    Conj,
    Flat,
    Geo,
    LinkBundle,
    MatrixPath,
    certify,
    project_solid_torus,
    toral_links,
)
from .jointspec import NormalTuple, joint_spectrum
from .lifting import lifted_links
from .matcore import (
    DiagnosticsError,
    PreconditionError,
    adjoint,
    as_cmatrix,
    exp_i_herm,
    op_norm,
)
from .ncrel import membership, parse as parse_relations, preset
from .softtorus import bott_index, clock_shift, soft_pair

__all__ = [
    "DecodeError",
    "decode_bundle",
    "decode_certificate",
    "decode_links",
    "decode_matrix",
    "encode_bundle",
    "encode_certificate",
    "encode_links",
    "encode_matrix",
    "gen_bundle",
    "json_text",
    "main",
    "write_artifact",
]

GEN_KINDS = ("commuting_pair", "clock_shift", "soft_pair")
MODES = ("normal", "hermitian", "unitary")


class DecodeError(PreconditionError):
    """An artifact file failed to decode or validate."""


# --- canonical JSON ----------------------------------------------------------


def _fmt_float(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise PreconditionError("cannot serialize non-finite float")
    if x == 0.0:  # avoid '-0', which would not survive a decode/encode cycle
        x = 0.0
    return f"{x:.17g}"


def _emit(x, out: list):
    if x is None:
        out.append("null")
    elif isinstance(x, bool):
        out.append("true" if x else "false")
    elif isinstance(x, (int, np.integer)):
        out.append(str(int(x)))
    elif isinstance(x, (float, np.floating)):
        out.append(_fmt_float(x))
    elif isinstance(x, str):
        out.append(json.dumps(x))
    elif isinstance(x, (list, tuple)):
        out.append("[")
        for i, v in enumerate(x):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    elif isinstance(x, dict):
        out.append("{")
        for i, key in enumerate(sorted(x)):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit(x[key], out)
        out.append("}")
    else:
        raise PreconditionError(f"cannot serialize {type(x).__name__}")


def json_text(obj) -> str:
    """Canonical single-line JSON: sorted keys, 17-significant-digit floats."""
    out: list = []
    _emit(obj, out)
    out.append("\n")
    return "".join(out)


def write_artifact(path: str, text: str) -> None:
    """Write text to `path` atomically (temp file in place, then rename)."""
    parent = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=parent, prefix=".tmp-artifact-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise DecodeError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise DecodeError(f"{path}: invalid JSON: {e}")


# --- matrix / array codecs -----------------------------------------------------


def encode_matrix(a) -> dict:
    a = as_cmatrix(a)
    return {
        "n": a.shape[0],
        "re": [[float(v) for v in row] for row in a.real],
        "im": [[float(v) for v in row] for row in a.imag],
    }


def _grid_of_floats(rows, n_rows, n_cols, where: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n_rows:
        raise DecodeError(f"{where}: expected {n_rows} rows")
    out = np.empty((n_rows, n_cols))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_cols:
            raise DecodeError(f"{where}: row {i} is not {n_cols} numbers")
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise DecodeError(f"{where}: entry [{i}][{j}] is not a number")
            out[i, j] = float(v)
    return out


def decode_matrix(obj, where: str) -> np.ndarray:
    if not isinstance(obj, dict) or set(obj) != {"n", "re", "im"}:
        raise DecodeError(f"{where}: expected an object with keys n, re, im")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise DecodeError(f"{where}: n must be a positive integer")
    re = _grid_of_floats(obj["re"], n, n, f"{where}.re")
    im = _grid_of_floats(obj["im"], n, n, f"{where}.im")
    return re + 1j * im


def _decode_mats(items, where: str) -> list:
    if not isinstance(items, list) or not items:
        raise DecodeError(f"{where}: expected a nonempty array of matrices")
    return [decode_matrix(m, f"{where}[{j}]") for j, m in enumerate(items)]


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise DecodeError(f"{where}: missing field {key!r}")
    return obj[key]


def _expect_type(obj, tag: str, where: str) -> None:
    if not isinstance(obj, dict) or obj.get("type") != tag:
        raise DecodeError(f"{where}: not a {tag} artifact")


# --- bundle generation and codec ----------------------------------------------


def _haar_unitary(n: int, rng) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _gen_diag(n: int, mode: str, rng) -> np.ndarray:
    if mode == "hermitian":
        return rng.uniform(-0.95, 0.95, n).astype(complex)
    if mode == "unitary":
        return np.exp(2j * np.pi * rng.random(n))
    radius = 0.95 * np.sqrt(rng.random(n))
    phase = 2.0 * np.pi * rng.random(n)
    return radius * np.exp(1j * phase)


def _perturb_diag(d: np.ndarray, mode: str, delta: float, rng) -> np.ndarray:
    if mode == "unitary":
        return d * np.exp(1j * rng.uniform(-1.0, 1.0, d.size) * (delta / 2.0))
    if mode == "hermitian":
        shifted = d.real + (delta / 2.0) * rng.uniform(-1.0, 1.0, d.size)
        return np.clip(shifted, -1.0, 1.0).astype(complex)
    noise = rng.uniform(-1.0, 1.0, d.size) + 1j * rng.uniform(-1.0, 1.0, d.size)
    noise /= max(1.0, float(np.abs(noise).max()))
    shifted = d + (delta / 2.0) * noise
    mags = np.abs(shifted)
    return np.where(mags > 1.0, shifted / mags, shifted)


def gen_bundle(
    kind: str,
    n: int,
    N: int = 2,
    delta: float = 0.0,
    seed: int = 0,
    mode: str = "normal",
    perturb: str = "within",
) -> dict:
    """Build a deterministic bundle artifact (still a plain dict, not yet JSON).

    commuting_pair draws X_j = Q D_j Q* with diagonal contractions D_j and
    perturbs toward Y within delta: "within" nudges the diagonals only (both
    tuples stay exactly commuting), "generic" also rotates the eigenbasis.
    clock_shift and soft_pair wrap the standard non-commuting unitary pairs
    for bott / relcheck / project flows (Y = X there).
    """
    if kind not in GEN_KINDS:
        raise PreconditionError(f"unknown generator kind {kind!r}")
    if mode not in MODES:
        raise PreconditionError(f"unknown mode {mode!r}")
    if perturb not in ("within", "generic"):
        raise PreconditionError(f"unknown perturbation {perturb!r}")
    if n < 1 or N < 1:
        raise PreconditionError("sizes must be positive")
    if not np.isfinite(delta) or delta < 0:
        raise PreconditionError("delta must be finite and >= 0")

    commuting = True
    if kind == "clock_shift":
        if N != 2:
            raise PreconditionError("clock_shift bundles always have N = 2")
        cs = clock_shift(n)
        x_mats = [cs.omega, cs.sigma]
        y_mats = [m.copy() for m in x_mats]
        mode = "unitary"
        commuting = n == 1
    elif kind == "soft_pair":
        if N != 2:
            raise PreconditionError("soft_pair bundles always have N = 2")
        sp = soft_pair(n, delta)
        x_mats = [sp.u, sp.v]
        y_mats = [m.copy() for m in x_mats]
        mode = "unitary"
        commuting = sp.defect == 0.0
    else:
        rng = np.random.default_rng(seed)
        q = _haar_unitary(n, rng)
        diags = [_gen_diag(n, mode, rng) for _ in range(N)]
        x_mats = [(q * d) @ adjoint(q) for d in diags]
        if delta == 0.0:
            y_mats = [m.copy() for m in x_mats]
        else:
            if perturb == "generic":
                k = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                k = k + adjoint(k)
                qy = q @ exp_i_herm(k / op_norm(k), delta / 4.0)
            else:
                qy = q
            y_mats = [
                (qy * _perturb_diag(d, mode, delta, rng)) @ adjoint(qy) for d in diags
            ]

    dmax = max(op_norm(xm - ym) for xm, ym in zip(x_mats, y_mats))
    if dmax > delta * (1 + 1e-9) + 1e-15:
        raise DiagnosticsError(
            f"generated displacement {dmax!r} exceeds requested delta {delta!r}"
        )
    return {
        "type": "bundle",
        "metadata": {
            "kind": kind,
            "seed": int(seed),
            "n": int(n),
            "N": len(x_mats),
            "mode": mode,
            "perturb": perturb if kind == "commuting_pair" else "none",
            "commuting": bool(commuting),
            "softness": float(delta) if kind == "soft_pair" else 0.0,
        },
        "delta": float(dmax),
        "x": [encode_matrix(m) for m in x_mats],
        "y": [encode_matrix(m) for m in y_mats],
    }


def encode_bundle(x_mats, y_mats, metadata: dict) -> dict:
    """Assemble a bundle artifact from explicit tuples (delta is recomputed)."""
    dmax = max(op_norm(as_cmatrix(a) - as_cmatrix(b)) for a, b in zip(x_mats, y_mats))
    return {
        "type": "bundle",
        "metadata": dict(metadata),
        "delta": float(dmax),
        "x": [encode_matrix(m) for m in x_mats],
        "y": [encode_matrix(m) for m in y_mats],
    }


def decode_bundle(obj, where: str) -> dict:
    """Validate a bundle artifact; returns dict with tuples and metadata.

    Recomputes delta = max_j ||X_j - Y_j|| and insists it matches the stored
    value to 1e-12, so silently edited matrices are caught on load.
    """
    _expect_type(obj, "bundle", where)
    meta = _field(obj, "metadata", where)
    for key in ("kind", "seed", "n", "N", "mode", "commuting"):
        _field(meta, key, f"{where}.metadata")
    x_mats = _decode_mats(_field(obj, "x", where), f"{where}.x")
    y_mats = _decode_mats(_field(obj, "y", where), f"{where}.y")
    if len(x_mats) != len(y_mats) or len(x_mats) != meta["N"]:
        raise DecodeError(f"{where}: tuple sizes disagree with metadata N")
    stored = float(_field(obj, "delta", where))
    dmax = max(op_norm(xm - ym) for xm, ym in zip(x_mats, y_mats))
    if abs(dmax - stored) > 1e-12:
        raise DecodeError(
            f"{where}: stored delta {stored!r} does not match recomputed {dmax!r}"
        )
    commuting = bool(meta["commuting"])
    tol = 1e-10 if commuting else float("inf")
    x = NormalTuple(x_mats, commutation_tol=tol)
    y = NormalTuple(y_mats, commutation_tol=tol)
    return {"x": x, "y": y, "delta": stored, "metadata": meta}


# --- link bundle codec ---------------------------------------------------------


def _encode_segment(seg) -> dict:
    if isinstance(seg, Flat):
        return {
            "kind": "flat",
            "a": encode_matrix(seg.a),
            "b": encode_matrix(seg.b),
            "duration": float(seg.duration),
        }
    if isinstance(seg, Conj):
        return {
            "kind": "conj",
            "h": encode_matrix(seg.h),
            "base": encode_matrix(seg.base),
            "theta0": float(seg.theta0),
            "theta1": float(seg.theta1),
            "duration": float(seg.duration),
        }
    if isinstance(seg, Geo):
        return {
            "kind": "geo",
            "base": encode_matrix(seg.base),
            "h": encode_matrix(seg.h),
            "theta0": float(seg.theta0),
            "theta1": float(seg.theta1),
            "duration": float(seg.duration),
        }
    raise PreconditionError(f"cannot serialize segment {type(seg).__name__}")


def _decode_segment(obj, where: str):
    kind = _field(obj, "kind", where)
    duration = float(_field(obj, "duration", where))
    if kind == "flat":
        return Flat(
            decode_matrix(_field(obj, "a", where), f"{where}.a"),
            decode_matrix(_field(obj, "b", where), f"{where}.b"),
            duration,
        )
    if kind in ("conj", "geo"):
        h = decode_matrix(_field(obj, "h", where), f"{where}.h")
        base = decode_matrix(_field(obj, "base", where), f"{where}.base")
        theta0 = float(_field(obj, "theta0", where))
        theta1 = float(_field(obj, "theta1", where))
        if kind == "conj":
            return Conj(h, base, theta0, theta1, duration)
        return Geo(base, h, theta0, theta1, duration)
    raise DecodeError(f"{where}: unknown segment kind {kind!r}")


def encode_links(bundle: LinkBundle) -> dict:
    return {
        "type": "links",
        "mode": bundle.mode,
        "epsilon_reported": float(bundle.epsilon_reported),
        "conjugator": None if bundle.conjugator is None else encode_matrix(bundle.conjugator),
        "lengths": [float(v) for v in bundle.lengths],
        "x": [encode_matrix(m) for m in bundle.x_mats],
        "y": [encode_matrix(m) for m in bundle.y_mats],
        "links": [
            {"segments": [_encode_segment(s) for s in link.segments]}
            for link in bundle.links
        ],
    }


def decode_links(obj, where: str) -> LinkBundle:
    _expect_type(obj, "links", where)
    raw_links = _field(obj, "links", where)
    if not isinstance(raw_links, list) or not raw_links:
        raise DecodeError(f"{where}.links: expected a nonempty array")
    links = []
    for j, entry in enumerate(raw_links):
        segs = _field(entry, "segments", f"{where}.links[{j}]")
        links.append(
            MatrixPath(
                [
                    _decode_segment(s, f"{where}.links[{j}].segments[{i}]")
                    for i, s in enumerate(segs)
                ]
            )
        )
    conj = obj.get("conjugator")
    return LinkBundle(
        links=links,
        x_mats=_decode_mats(_field(obj, "x", where), f"{where}.x"),
        y_mats=_decode_mats(_field(obj, "y", where), f"{where}.y"),
        epsilon_reported=float(_field(obj, "epsilon_reported", where)),
        mode=str(_field(obj, "mode", where)),
        conjugator=None if conj is None else decode_matrix(conj, f"{where}.conjugator"),
        lengths=[float(v) for v in _field(obj, "lengths", where)],
    )


# --- certificate codec -----------------------------------------------------------


def encode_certificate(cert: Certificate) -> dict:
    tols = cert.tolerances
    return {
        "type": "certificate",
        "passed": bool(cert.passed),
        "epsilon": float(cert.epsilon),
        "mode": cert.mode,
        "grid": [float(v) for v in cert.grid],
        "endpoint_errors": [[float(v) for v in row] for row in cert.endpoint_errors],
        "normality": [[float(v) for v in row] for row in cert.normality],
        "contraction_excess": [[float(v) for v in row] for row in cert.contraction_excess],
        "distance_to_target": [[float(v) for v in row] for row in cert.distance_to_target],
        "commutation": [[float(v) for v in row] for row in cert.commutation],
        "pair_index": [[int(j), int(k)] for j, k in cert.pair_index],
        "mode_defects": None
        if cert.mode_defects is None
        else [[float(v) for v in row] for row in cert.mode_defects],
        "lengths": [float(v) for v in cert.lengths],
        "lipschitz": [float(v) for v in cert.lipschitz],
        "intergrid_bounds": [float(v) for v in cert.intergrid_bounds],
        "tolerances": {
            "endpoint": tols.endpoint,
            "commutation": tols.commutation,
            "normality": tols.normality,
            "contraction": tols.contraction,
            "mode_defect": tols.mode_defect,
        },
        "worst": cert.worst(),
    }


def decode_certificate(obj, where: str) -> Certificate:
    _expect_type(obj, "certificate", where)
    grid = np.array([float(v) for v in _field(obj, "grid", where)])
    m = grid.size
    count = len(_field(obj, "lengths", where))

    def table(key, rows, cols):
        raw = _field(obj, key, where)
        if rows == 0:
            return np.zeros((0, cols))
        return _grid_of_floats(raw, rows, cols, f"{where}.{key}")

    pair_index = [tuple(p) for p in _field(obj, "pair_index", where)]
    raw_mode = _field(obj, "mode_defects", where)
    tols = _field(obj, "tolerances", where)
    return Certificate(
        grid=grid,
        endpoint_errors=table("endpoint_errors", count, 2),
        normality=table("normality", count, m),
        contraction_excess=table("contraction_excess", count, m),
        distance_to_target=table("distance_to_target", count, m),
        commutation=table("commutation", len(pair_index), m),
        pair_index=pair_index,
        mode_defects=None if raw_mode is None else _grid_of_floats(raw_mode, count, m, where),
        lengths=np.array([float(v) for v in obj["lengths"]]),
        lipschitz=np.array([float(v) for v in _field(obj, "lipschitz", where)]),
        intergrid_bounds=np.array([float(v) for v in _field(obj, "intergrid_bounds", where)]),
        epsilon=float(_field(obj, "epsilon", where)),
        mode=str(_field(obj, "mode", where)),
        tolerances=CertTolerances(**{k: float(v) for k, v in tols.items()}),
        passed=bool(_field(obj, "passed", where)),
    )


# --- subcommand helpers ------------------------------------------------------------


def _require_commuting(meta: dict, path: str) -> None:
    if not meta["commuting"]:
        raise PreconditionError(
            f"{path}: bundle kind {meta['kind']!r} is not a commuting tuple; "
            "link/lift/spectrum need exactly commuting inputs"
        )


def _print_certificate(cert: Certificate) -> None:
    verdict = "PASS" if cert.passed else "FAIL"
    print(f"certificate: {verdict} (epsilon={cert.epsilon:.6g}, mode={cert.mode})")
    for key, value in cert.worst().items():
        print(f"  worst {key}: {value:.6e}")
    print(f"  lengths: {[float(f'{v:.6g}') for v in cert.lengths]}")


def _cmd_gen(args) -> int:
    artifact = gen_bundle(
        kind=args.kind,
        n=args.n,
        N=args.N,
        delta=args.delta,
        seed=args.seed,
        mode=args.mode,
        perturb=args.perturb,
    )
    write_artifact(args.output, json_text(artifact))
    meta = artifact["metadata"]
    print(
        f"wrote {args.output}: kind={meta['kind']} n={meta['n']} N={meta['N']} "
        f"mode={meta['mode']} delta={artifact['delta']:.6g}"
    )
    return 0


def _certify_and_write(bundle: LinkBundle, args, grid: int) -> int:
    eps = args.epsilon if args.epsilon is not None else bundle.epsilon_reported
    cert = certify(bundle, eps, grid_points=grid)
    write_artifact(args.output, json_text(encode_certificate(cert)))
    _print_certificate(cert)
    return 0 if cert.passed else 1


def _cmd_link(args) -> int:
    loaded = decode_bundle(_load_json(args.input), args.input)
    meta = loaded["metadata"]
    _require_commuting(meta, args.input)
    mode = args.mode if args.mode is not None else meta["mode"]
    bundle = toral_links(
        loaded["x"], loaded["y"], mode=mode, tol=args.tol, seed=int(meta["seed"])
    )
    if args.links_output:
        write_artifact(args.links_output, json_text(encode_links(bundle)))
    return _certify_and_write(bundle, args, args.grid)


def _cmd_lift(args) -> int:
    loaded = decode_bundle(_load_json(args.input), args.input)
    meta = loaded["metadata"]
    _require_commuting(meta, args.input)
    lift, bundle, report = lifted_links(
        loaded["x"], loaded["y"], seed=int(meta["seed"]), grid_points=args.grid
    )
    if args.links_output:
        write_artifact(args.links_output, json_text(encode_links(bundle)))
    if args.report_output:
        payload = {"type": "lift_report"}
        payload.update({k: float(v) for k, v in report.items()})
        write_artifact(args.report_output, json_text(payload))
    print(
        "lift: hom_product_defect={hom_product_defect:.3e} "
        "decay_max_error={decay_max_error:.3e}".format(**report)
    )
    return _certify_and_write(bundle, args, args.grid)


def _cmd_certify(args) -> int:
    bundle = decode_links(_load_json(args.input), args.input)
    return _certify_and_write(bundle, args, args.grid)


def _cmd_bott(args) -> int:
    loaded = decode_bundle(_load_json(args.input), args.input)
    mats = loaded["x"].mats
    if len(mats) != 2:
        raise PreconditionError(f"{args.input}: bott needs a bundle with N = 2")
    result = bott_index(mats[0], mats[1], gap_tol=args.gap_tol, tol=args.tol)
    artifact = {
        "type": "bott",
        "index": int(result.index),
        "gap": float(result.gap),
        "winding": int(result.winding),
        "defect": float(result.defect),
    }
    write_artifact(args.output, json_text(artifact))
    print(
        f"bott index {result.index} (winding {result.winding}, "
        f"gap {result.gap:.4f}, defect {result.defect:.4f})"
    )
    return 0


def _relations_for(args):
    if (args.preset is None) == (args.rel_file is None):
        raise PreconditionError("relcheck needs exactly one of --preset / --rel-file")
    if args.preset is not None:
        return preset(args.preset, args.delta)
    with open(args.rel_file, encoding="utf-8") as handle:
        parsed = parse_relations(handle.read())
    if not hasattr(parsed, "relations"):
        raise PreconditionError(f"{args.rel_file}: file holds an expression, not relations")
    return parsed


def _cmd_relcheck(args) -> int:
    rset = _relations_for(args)
    obj = _load_json(args.input)
    if isinstance(obj, dict) and obj.get("type") == "assignment":
        raw = _field(obj, "matrices", args.input)
        assign = {
            name: decode_matrix(m, f"{args.input}.matrices[{name!r}]")
            for name, m in raw.items()
        }
    else:
        loaded = decode_bundle(obj, args.input)
        mats = loaded["x"].mats
        names = rset.variables
        if len(names) != len(mats):
            raise PreconditionError(
                f"{args.input}: bundle has {len(mats)} matrices but the relation "
                f"set uses {len(names)} variables {names}"
            )
        assign = dict(zip(names, mats))
    report = membership(assign, rset, slack=args.slack)
    payload = {"type": "membership"}
    payload.update(report.to_dict())
    write_artifact(args.output, json_text(payload))
    print(f"membership: {'PASS' if report.member else 'FAIL'}")
    for text, defect, bound, ok in zip(
        report.relations, report.defects, report.bounds, report.passed
    ):
        print(f"  [{'ok' if ok else 'XX'}] {text}  (defect {defect:.6e}, bound {bound:.6g})")
    return 0 if report.member else 1


def _demo_path(name: str) -> MatrixPath:
    if name == "helix":
        return MatrixPath(
            [Geo(0.75 * np.eye(1, dtype=complex), 2.0 * np.pi * np.eye(1), 0.0, 1.0)]
        )
    if name == "m3":
        # unitary u3 = exp(2*pi*i/3 f(number)) and a fixed basis rotation,
        # traced as the conjugation flow u3 -> W u3 W*
        u3 = np.diag(np.exp(2j * np.pi / 3.0 * np.array([1.0, 2.0 / 3.0, 1.0 / 3.0])))
        k = np.array(
            [
                [0.20, 0.60, 0.00],
                [0.60, 0.00, 0.30],
                [0.00, 0.30, -0.20],
            ],
            dtype=complex,
        )
        return MatrixPath([Conj(k, u3, 0.0, 1.0)])
    raise PreconditionError(f"unknown demo {name!r}")


def _cmd_project(args) -> int:
    if (args.demo is None) == (args.input is None):
        raise PreconditionError("project needs exactly one of --input / --demo")
    if args.demo is not None:
        path = _demo_path(args.demo)
    else:
        bundle = decode_links(_load_json(args.input), args.input)
        if not 0 <= args.link_index < len(bundle.links):
            raise PreconditionError(
                f"--link-index {args.link_index} out of range for {len(bundle.links)} links"
            )
        path = bundle.links[args.link_index]
    rows = project_solid_torus(path, samples=args.samples)
    lines = ["t,k,re,im,angle_re,angle_im"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    _fmt_float(row[0]),
                    str(int(round(row[1]))),
                    _fmt_float(row[2]),
                    _fmt_float(row[3]),
                    _fmt_float(row[4]),
                    _fmt_float(row[5]),
                ]
            )
        )
    write_artifact(args.output, "\n".join(lines) + "\n")
    print(f"wrote {args.output}: {rows.shape[0]} flow samples")
    return 0


def _cmd_spectrum(args) -> int:
    loaded = decode_bundle(_load_json(args.input), args.input)
    _require_commuting(loaded["metadata"], args.input)
    tup = loaded["y"] if args.which == "y" else loaded["x"]
    points = joint_spectrum(tup, seed=args.seed)
    artifact = {
        "type": "spectrum",
        "n": points.shape[0],
        "N": points.shape[1],
        "re": [[float(v) for v in row] for row in points.real],
        "im": [[float(v) for v in row] for row in points.imag],
    }
    write_artifact(args.output, json_text(artifact))
    print(f"wrote {args.output}: {points.shape[0]} joint spectrum points")
    return 0


# --- argument parsing ------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torlinks",
        description="Commutativity-preserving matrix homotopies: generate, link, certify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a deterministic tuple bundle")
    gen.add_argument("--kind", choices=GEN_KINDS, default="commuting_pair")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--N", type=int, default=2)
    gen.add_argument("--delta", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--mode", choices=MODES, default="normal")
    gen.add_argument("--perturb", choices=("within", "generic"), default="within")
    gen.add_argument("--output", required=True)
    gen.set_defaults(func=_cmd_gen)

    link = sub.add_parser("link", help="build toral links for a bundle and certify them")
    link.add_argument("--input", required=True)
    link.add_argument("--output", required=True, help="certificate JSON")
    link.add_argument("--links-output", help="also save the link paths")
    link.add_argument("--epsilon", type=float)
    link.add_argument("--grid", type=int, default=101)
    link.add_argument("--tol", type=float, default=1e-9)
    link.add_argument("--mode", choices=MODES)
    link.set_defaults(func=_cmd_link)

    lift = sub.add_parser("lift", help="lift to doubled dimension and certify")
    lift.add_argument("--input", required=True)
    lift.add_argument("--output", required=True, help="certificate JSON")
    lift.add_argument("--links-output")
    lift.add_argument("--report-output")
    lift.add_argument("--epsilon", type=float)
    lift.add_argument("--grid", type=int, default=101)
    lift.set_defaults(func=_cmd_lift)

    cert = sub.add_parser("certify", help="re-certify a saved links artifact")
    cert.add_argument("--input", required=True)
    cert.add_argument("--output", required=True)
    cert.add_argument("--epsilon", type=float)
    cert.add_argument("--grid", type=int, default=101)
    cert.set_defaults(func=_cmd_certify)

    bott = sub.add_parser("bott", help="Bott index of a unitary pair bundle")
    bott.add_argument("--input", required=True)
    bott.add_argument("--output", required=True)
    bott.add_argument("--gap-tol", type=float, default=0.05)
    bott.add_argument("--tol", type=float, default=1e-10)
    bott.set_defaults(func=_cmd_bott)

    rel = sub.add_parser("relcheck", help="check matrices against a relation set")
    rel.add_argument("--input", required=True, help="assignment or bundle JSON")
    rel.add_argument("--preset")
    rel.add_argument("--delta", type=float, help="parameter for soft presets")
    rel.add_argument("--rel-file")
    rel.add_argument("--slack", type=float, default=1e-12)
    rel.add_argument("--output", required=True)
    rel.set_defaults(func=_cmd_relcheck)

    proj = sub.add_parser("project", help="export solid-torus flow lines as CSV")
    proj.add_argument("--input", help="links artifact")
    proj.add_argument("--link-index", type=int, default=0)
    proj.add_argument("--demo", choices=("helix", "m3"))
    proj.add_argument("--samples", type=int, default=101)
    proj.add_argument("--output", required=True)
    proj.set_defaults(func=_cmd_project)

    spec = sub.add_parser("spectrum", help="joint spectrum of a commuting bundle")
    spec.add_argument("--input", required=True)
    spec.add_argument("--which", choices=("x", "y"), default="x")
    spec.add_argument("--seed", type=int, default=0)
    spec.add_argument("--output", required=True)
    spec.set_defaults(func=_cmd_spectrum)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PreconditionError, DiagnosticsError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
