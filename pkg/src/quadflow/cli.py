"""Command-line front end.

Every subcommand can read defaults from a JSON config file; explicit flags
win. All numeric outputs go through the canonical JSON writer and carry
provenance (tool version, backend, seed, tolerances), so identical configs
give byte-identical reports. Exit codes: 0 ok, 1 verification failure or
module error (with a machine-readable record on stderr), 2 usage error.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from quadflow import io as qio
from quadflow.diagnostics import (
    conjugacy_error,
    lyapunov_max,
    poincare_section,
    scan_chaotic_ic,
    wrap_torus,
)
from quadflow.errors import QuadflowError, UsageError
from quadflow.harmonics import (
    SphereField,
    build_sphere_tensor,
    decompose_sphere_field,
    drop_constant_index,
    harmonic_basis,
    harmonic_dimension,
    harmonic_dimension_report,
    reconstruction_residual,
    so_generators,
    so_torus_total_dimension,
    sphere_divergence_check,
    theta_coefficients,
)
from quadflow.integrate import integrate_manifold_field, integrate_quadratic
from quadflow.lift import (
    commutator_closure,
    f_derivative,
    iterated_commutator_bound,
    product_sparsity_check,
    random_antisymmetric,
    standard_so_basis,
)
from quadflow.nhim import (
    EQUATOR_CIRCLE,
    extend_with_contraction,
    invariant_circle_locate,
    random_tangent_perturbation,
    rotation_field,
)
from quadflow.polynomials import PolynomialField
from quadflow.tensor import (
    check_antisymmetry,
    check_tao_condition,
    symmetrize,
    tensor_divergence,
)
from quadflow.torus import (
    TorusField,
    build_torus_tensor,
    enumerate_lattice,
    torus_divergence_check,
    validate_torus_field,
)


@dataclass
class RunConfig:
    subcommand: str
    values: dict

    def get(self, name, default=None):
        return self.values.get(name, default)


def _merge_config(args):
    """Explicit flags beat config-file values beat parser defaults."""
    values = {}
    config = {}
    if getattr(args, "config", None):
        config = json.loads(Path(args.config).read_text())
        sub = config.get("subcommand")
        if sub and sub != args.subcommand:
            raise UsageError(
                f"config is for subcommand {sub!r}, invoked {args.subcommand!r}"
            )
    for key, value in vars(args).items():
        if key in ("config", "subcommand", "func"):
            continue
        if value is None and key in config:
            values[key] = config[key]
        else:
            values[key] = value
    return RunConfig(args.subcommand, values)


def _vector(text, name="vector"):
    if text is None:
        raise UsageError(f"missing {name}")
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=float)
    try:
        return np.array([float(v) for v in str(text).split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse {name} {text!r}") from exc


def _floats(text, name="list"):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",")]


def _config_echo(cfg):
    echo = {}
    for key, value in sorted(cfg.values.items()):
        if isinstance(value, (str, int, float, bool)) or value is None:
            echo[key] = value
        else:
            echo[key] = str(value)
    echo["subcommand"] = cfg.subcommand
    return echo


def _emit(cfg, payload, default_print=True):
    out = cfg.get("out_report")
    payload = dict(payload)
    payload["config"] = _config_echo(cfg)
    text = qio.dump_canonical(payload)
    if out:
        Path(out).write_text(text)
    if default_print:
        sys.stdout.write(text)
    return payload


def _load_source(cfg, need="either"):
    tensor = field = None
    if cfg.get("tensor"):
        tensor = qio.load_tensor(cfg.get("tensor"))
    if cfg.get("field"):
        field = qio.load_field(cfg.get("field"))
    if need == "tensor" and tensor is None:
        raise UsageError("--tensor is required")
    if need == "field" and field is None:
        raise UsageError("--field is required")
    if need == "either" and tensor is None and field is None:
        raise UsageError("one of --field or --tensor is required")
    return field, tensor


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_embed_torus(cfg):
    field, _ = _load_source(cfg, need="field")
    if not isinstance(field, TorusField):
        raise UsageError("embed-torus needs a torus-field file")
    validation = validate_torus_field(field)
    lattice = field.lattice()
    tensor = build_torus_tensor(field, lattice)
    div = torus_divergence_check(field)
    payload = {
        "n": field.n,
        "cutoff": field.cutoff,
        "lattice": {
            "full_count": lattice.full_count,
            "representatives": lattice.size,
            "includes_zero": lattice.includes_zero,
        },
        "embedding_dimension": tensor.d,
        "so_torus_dimension": so_torus_total_dimension(tensor.d),
        "antisymmetry_violation": check_antisymmetry(tensor),
        "max_reality_violation": validation.max_reality_violation,
        "field_divergence_free": div.field_divergence_free,
        "tensor_divergence_max": div.tensor_form_max,
        "nnz": tensor.nnz,
        "meta": qio.provenance(),
    }
    if cfg.get("out_tensor"):
        qio.save_tensor(cfg.get("out_tensor"), tensor)
    _emit(cfg, payload)
    return 0


def cmd_embed_sphere(cfg):
    field, _ = _load_source(cfg, need="field")
    degree = cfg.get("max_degree")
    if isinstance(field, SphereField):
        sphere = field
    else:
        if not isinstance(field, PolynomialField):
            raise UsageError("embed-sphere needs a polynomial-field or sphere-field file")
        if degree is None:
            raise UsageError("--max-degree is required for polynomial inputs")
        n = field.nvars - 1
        basis = harmonic_basis(n, int(degree))
        gens = so_generators(n)
        sphere = decompose_sphere_field(field, basis, gens)
    theta = theta_coefficients(sphere.basis, sphere.generators, verify=False)
    tensor = build_sphere_tensor(sphere, theta)
    dropped = False
    if cfg.get("drop_constant") and sphere.has_zero_mean():
        tensor = drop_constant_index(tensor)
        dropped = True
    payload = {
        "n": sphere.n,
        "max_degree": sphere.basis.max_degree,
        "basis_hash": sphere.basis.content_hash(),
        "embedding_dimension": tensor.d,
        "so_torus_dimension": so_torus_total_dimension(tensor.d),
        "dropped_constant": dropped,
        "antisymmetry_violation": check_antisymmetry(tensor),
        "nnz": tensor.nnz,
        "meta": qio.provenance(),
    }
    if isinstance(field, PolynomialField):
        payload["reconstruction_residual"] = reconstruction_residual(sphere, field)
    if cfg.get("out_tensor"):
        qio.save_tensor(cfg.get("out_tensor"), tensor)
    if cfg.get("out_field"):
        qio.save_sphere_field(cfg.get("out_field"), sphere)
    _emit(cfg, payload)
    return 0


def cmd_verify(cfg):
    field, tensor = _load_source(cfg, need="tensor")
    tol = float(cfg.get("tol") or 1e-12)
    seed = int(cfg.get("seed") or 0)
    samples = int(cfg.get("tao_samples") or 1000)
    anti = check_antisymmetry(tensor)
    worst_triple = None
    if tensor.nnz:
        lookup = tensor.entry_dict()
        worst_triple = max(
            lookup, key=lambda key: abs(lookup[key] + lookup.get((key[2], key[1], key[0]), 0.0))
        )
    tao = check_tao_condition(symmetrize(tensor), samples=samples, seed=seed)
    div = tensor_divergence(tensor)
    ok = anti <= tol and tao.max_residual <= tol
    payload = {
        "antisymmetry_violation": anti,
        "worst_triple": list(worst_triple) if worst_triple else None,
        "tao_random_residual": tao.max_random_residual,
        "tao_symbolic_residual": tao.symbolic_max,
        "divergence_form_max": float(np.max(np.abs(div), initial=0.0)),
        "tolerance": tol,
        "passed": bool(ok),
        "meta": qio.provenance(seed=seed),
    }
    if field is not None and isinstance(field, TorusField):
        payload["max_reality_violation"] = validate_torus_field(field).max_reality_violation
    _emit(cfg, payload)
    return 0 if ok else 1


def cmd_integrate(cfg):
    field, tensor = _load_source(cfg)
    t_max = float(cfg.get("horizon") or 10.0)
    rtol = float(cfg.get("rtol") or 1e-10)
    atol = float(cfg.get("atol") or 1e-10)
    x0 = _vector(cfg.get("x0"), "--x0")
    if tensor is not None:
        traj = integrate_quadratic(tensor, x0, t_max, rtol=rtol, atol=atol)
    else:
        traj = integrate_manifold_field(field, x0, t_max, rtol=rtol, atol=atol)
    payload = {
        "dimension": traj.dim,
        "t_final": traj.t_final,
        "steps_accepted": traj.naccepted,
        "steps_rejected": traj.nrejected,
        "norm_sq_drift": traj.norm_sq_drift(),
        "final_state": traj.final_state.tolist(),
        "meta": qio.provenance(rtol=rtol, atol=atol),
    }
    if cfg.get("out_csv"):
        qio.save_trajectory_csv(cfg.get("out_csv"), traj)
    _emit(cfg, payload)
    return 0


def cmd_compare(cfg):
    field, tensor = _load_source(cfg)
    if field is None or tensor is None:
        raise UsageError("compare needs both --field and --tensor")
    t_max = float(cfg.get("horizon") or 20.0)
    rtol = float(cfg.get("rtol") or 1e-10)
    atol = float(cfg.get("atol") or 1e-10)
    x0 = _vector(cfg.get("x0"), "--x0")
    rep = conjugacy_error(field, tensor, x0, t_max, rtol=rtol, atol=atol,
                          nsamples=int(cfg.get("nsamples") or 1001))
    payload = {
        "sup_error": rep.sup_error,
        "horizon": t_max,
        "x_steps": rep.x_trajectory.naccepted,
        "y_steps": rep.y_trajectory.naccepted,
        "meta": qio.provenance(rtol=rtol, atol=atol),
    }
    _emit(cfg, payload)
    return 0


def cmd_lyapunov(cfg):
    field, tensor = _load_source(cfg)
    t_max = float(cfg.get("horizon") or 1000.0)
    rtol = float(cfg.get("rtol") or 1e-8)
    atol = float(cfg.get("atol") or 1e-10)
    seed = int(cfg.get("seed") or 0)
    scan_count = int(cfg.get("scan") or 0)
    payload = {"meta": qio.provenance(seed=seed, rtol=rtol, atol=atol)}
    if cfg.get("x0") is not None:
        x0 = _vector(cfg.get("x0"), "--x0")
    elif scan_count and isinstance(field, TorusField):
        scan = scan_chaotic_ic(field, count=scan_count,
                               t_scan=float(cfg.get("t_scan") or 300.0),
                               seed=seed, rtol=rtol, atol=atol)
        x0 = scan.best_x0
        payload["scan"] = {
            "count": scan_count,
            "best_x0": scan.best_x0.tolist(),
            "best_short_estimate": scan.best_estimate,
        }
    else:
        raise UsageError("lyapunov needs --x0 or --scan with a torus field")
    source = tensor if tensor is not None else field
    if tensor is not None and field is not None:
        from quadflow.diagnostics import embed_state

        x0 = embed_state(field, x0)
    res = lyapunov_max(source, x0, t_max, seed=seed, rtol=rtol, atol=atol,
                       renorm_interval=float(cfg.get("renorm") or 1.0))
    payload.update({
        "estimate": res.estimate,
        "variability": res.variability,
        "converged": bool(res.converged),
        "trace_tail": res.trace[-10:].tolist(),
        "horizon": t_max,
    })
    _emit(cfg, payload)
    return 0


def cmd_poincare(cfg):
    field, tensor = _load_source(cfg)
    source = tensor if tensor is not None else field
    t_max = float(cfg.get("horizon") or 100.0)
    rtol = float(cfg.get("rtol") or 1e-10)
    atol = float(cfg.get("atol") or 1e-10)
    x0 = _vector(cfg.get("x0"), "--x0")
    normal = _vector(cfg.get("normal"), "--normal")
    section = poincare_section(source, x0, t_max, normal,
                               offset=float(cfg.get("offset") or 0.0),
                               direction=int(cfg.get("direction") or 0),
                               rtol=rtol, atol=atol)
    points = section.points
    if section.lattice_levels:
        points = wrap_torus(points)
    payload = {
        "crossings": int(len(section.times)),
        "horizon": t_max,
        "meta": qio.provenance(rtol=rtol, atol=atol),
    }
    if cfg.get("out_csv"):
        qio.save_points_csv(cfg.get("out_csv"), section.times, points)
    _emit(cfg, payload)
    return 0


def cmd_nhim_demo(cfg):
    strength = float(cfg.get("contraction") or 5.0)
    deltas = _floats(cfg.get("delta") or "0.001,0.005,0.01", "--delta")
    t_settle = float(cfg.get("t_settle") or 8.0)
    seed = int(cfg.get("seed") or 0)
    base = rotation_field()
    extended = extend_with_contraction(EQUATOR_CIRCLE, base, strength)
    perturbation = random_tangent_perturbation(seed)
    runs = []
    outdir = cfg.get("outdir")
    clean = invariant_circle_locate(extended, t_settle=t_settle)
    runs.append({"delta": 0.0, "distance": clean.hausdorff_distance,
                 "profile_shift": clean.profile_shift})
    if outdir:
        qio.save_points_csv(Path(outdir) / "circle_delta_0.csv",
                            np.zeros(len(clean.curve)), clean.curve)
    previous = clean.hausdorff_distance
    monotone = True
    within = True
    for delta in deltas:
        located = invariant_circle_locate(extended + perturbation * delta,
                                          t_settle=t_settle)
        runs.append({"delta": delta, "distance": located.hausdorff_distance,
                     "profile_shift": located.profile_shift})
        monotone = monotone and located.hausdorff_distance >= previous - 1e-12
        within = within and located.hausdorff_distance <= 10.0 * delta
        previous = located.hausdorff_distance
        if outdir:
            qio.save_points_csv(Path(outdir) / f"circle_delta_{delta:g}.csv",
                                np.zeros(len(located.curve)), located.curve)
    payload = {
        "contraction": strength,
        "t_settle": t_settle,
        "runs": runs,
        "monotone_in_delta": bool(monotone),
        "within_ten_delta": bool(within),
        "meta": qio.provenance(seed=seed),
    }
    _emit(cfg, payload)
    return 0 if (monotone and within) else 1


def cmd_dims(cfg):
    n = int(cfg.get("n"))
    degree = int(cfg.get("degree"))
    report = harmonic_dimension_report(n, degree)
    d = report.direct
    total = so_torus_total_dimension(d)
    print(f"harmonic dimension d(S^{n}, degree <= {degree}) = {d}")
    print(f"dim SO({d}) x T^{d} = {total}")
    if not report.matches:
        print(f"printed closed-form sum evaluates to {report.closed_form:g} "
              f"(direct count {d} is canonical)")
    payload = {
        "n": n,
        "degree": degree,
        "harmonic_dimension": d,
        "per_degree": [harmonic_dimension(n, j, "per-degree") for j in range(degree + 1)],
        "so_torus_dimension": total,
        "closed_form_value": report.closed_form,
        "closed_form_matches": bool(report.matches),
        "meta": qio.provenance(),
    }
    if cfg.get("torus_cutoff") is not None:
        cutoff = float(cfg.get("torus_cutoff"))
        full = enumerate_lattice(n, cutoff, zero_mean=False)
        reduced = enumerate_lattice(n, cutoff, zero_mean=True)
        payload["torus"] = {
            "cutoff": cutoff,
            "full_count": full.full_count,
            "representatives_without_zero": reduced.size,
            "embedding_dimension": 2 * reduced.size,
            "so_torus_dimension": so_torus_total_dimension(2 * reduced.size),
        }
        print(f"torus lattice |k| <= {cutoff:g}: {full.full_count} points, "
              f"{reduced.size} antipodal representatives (zero dropped), "
              f"embedding dimension {2 * reduced.size}")
    _emit(cfg, payload, default_print=False)
    return 0


def cmd_lift_check(cfg):
    dim = int(cfg.get("dim") or 4)
    max_word = int(cfg.get("max_word") or 4)
    closure_dim = int(cfg.get("closure_dim") or 8)
    seed = int(cfg.get("seed") or 0)
    rng = np.random.default_rng(seed)
    basis = standard_so_basis(dim)
    nb = len(basis)

    from itertools import product as iproduct

    sparsity_ok = True
    words_checked = 0
    for length in range(1, max_word + 1):
        for word in iproduct(range(nb), repeat=length):
            if not product_sparsity_check(word, dim, basis).ok:
                sparsity_ok = False
            words_checked += 1

    closure_ok = True
    for d_small in range(2, closure_dim + 1):
        try:
            commutator_closure(d_small)
        except QuadflowError:
            closure_ok = False

    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    fd_worst = 0.0
    fd_count = int(cfg.get("fd_words") or 24)
    for _ in range(fd_count):
        length = int(rng.integers(1, 4))
        word = [int(v) for v in rng.integers(0, nb, size=length)]
        mu, nu = (int(v) for v in rng.integers(0, dim, size=2))
        a = f_derivative(mu, nu, q, word, method="formula")
        b = f_derivative(mu, nu, q, word, method="fd")
        fd_worst = max(fd_worst, abs(a - b))
    fd_ok = fd_worst <= 1e-6

    s = random_antisymmetric(dim, rng)
    bound = iterated_commutator_bound(s, max_word)
    ok = sparsity_ok and closure_ok and fd_ok
    payload = {
        "dim": dim,
        "sparsity_ok": bool(sparsity_ok),
        "sparsity_words": words_checked,
        "closure_ok": bool(closure_ok),
        "closure_max_dim": closure_dim,
        "fd_agreement_worst": fd_worst,
        "fd_ok": bool(fd_ok),
        "iterated_bound_constant": bound.observed_constant,
        "iterated_bound_per_length": bound.max_norm_per_length,
        "passed": bool(ok),
        "meta": qio.provenance(seed=seed),
    }
    _emit(cfg, payload)
    return 0 if ok else 1


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="quadflow",
        description="Quadratic embeddings of torus and sphere vector fields, "
                    "with verification and chaos diagnostics.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out-report", dest="out_report", help="write the JSON report here")
        p.set_defaults(func=fn)
        return p

    p = add("embed-torus", cmd_embed_torus, help="build the torus quadratic tensor")
    p.add_argument("--field")
    p.add_argument("--out-tensor", dest="out_tensor")

    p = add("embed-sphere", cmd_embed_sphere, help="decompose and build the sphere tensor")
    p.add_argument("--field")
    p.add_argument("--max-degree", dest="max_degree", type=int)
    p.add_argument("--drop-constant", dest="drop_constant", action="store_const", const=True)
    p.add_argument("--out-tensor", dest="out_tensor")
    p.add_argument("--out-field", dest="out_field")

    p = add("verify", cmd_verify, help="check antisymmetry and the cubic-form condition")
    p.add_argument("--tensor")
    p.add_argument("--field")
    p.add_argument("--tol", type=float)
    p.add_argument("--tao-samples", dest="tao_samples", type=int)
    p.add_argument("--seed", type=int)

    p = add("integrate", cmd_integrate, help="integrate a tensor or field flow")
    p.add_argument("--tensor")
    p.add_argument("--field")
    p.add_argument("--x0")
    p.add_argument("-T", "--horizon", dest="horizon", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--out-csv", dest="out_csv")

    p = add("compare", cmd_compare, help="certify flow conjugacy through the embedding")
    p.add_argument("--tensor")
    p.add_argument("--field")
    p.add_argument("--x0")
    p.add_argument("-T", "--horizon", dest="horizon", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--nsamples", type=int)

    p = add("lyapunov", cmd_lyapunov, help="largest Lyapunov exponent estimate")
    p.add_argument("--tensor")
    p.add_argument("--field")
    p.add_argument("--x0")
    p.add_argument("--scan", type=int, help="scan this many seeded initial conditions")
    p.add_argument("--t-scan", dest="t_scan", type=float)
    p.add_argument("-T", "--horizon", dest="horizon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--renorm", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)

    p = add("poincare", cmd_poincare, help="hyperplane section of a flow")
    p.add_argument("--tensor")
    p.add_argument("--field")
    p.add_argument("--x0")
    p.add_argument("--normal")
    p.add_argument("--offset", type=float)
    p.add_argument("--direction", type=int)
    p.add_argument("-T", "--horizon", dest="horizon", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--out-csv", dest="out_csv")

    p = add("nhim-demo", cmd_nhim_demo, help="equator persistence demonstration")
    p.add_argument("--contraction", type=float)
    p.add_argument("--delta")
    p.add_argument("--t-settle", dest="t_settle", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--outdir")

    p = add("dims", cmd_dims, help="dimension counts of the embedding pipeline")
    p.add_argument("--n", type=int, required=False)
    p.add_argument("--degree", type=int, required=False)
    p.add_argument("--torus-cutoff", dest="torus_cutoff", type=float)

    p = add("lift-check", cmd_lift_check, help="verify the lift algebra")
    p.add_argument("--dim", type=int)
    p.add_argument("--max-word", dest="max_word", type=int)
    p.add_argument("--closure-dim", dest="closure_dim", type=int)
    p.add_argument("--fd-words", dest="fd_words", type=int)
    p.add_argument("--seed", type=int)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        return args.func(cfg)
    except UsageError as exc:
        sys.stderr.write(qio.dump_canonical({"error": exc.code, "message": str(exc)}))
        return 2
    except QuadflowError as exc:
        sys.stderr.write(qio.dump_canonical({"error": exc.code, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
