"""Experiment runners behind the ``crnet`` command.

Each runner writes CSV reports (and figures) under ``<out>/<kind>/`` and
returns a :class:`RunReport` whose checks decide the exit status.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .. import constructions as con
from .. import dynamics as dyn
from .. import networks as nw
from .. import plotting
from .. import radial as rad
from .. import symmetry as sym
from ..ctensor import kept, zrelu, zrelu_wirtinger
from .config import ConfigError
from .parallel import keyed_map
from .reports import Checks, write_csv
from .training import (init_pair, imaginary_masks, match_budget, real_width_for_budget,
                       train_squared)


@dataclass
class RunReport:
    kind: str
    checks: Checks
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.checks.passed


def _outdir(cfg):
    path = os.path.join(cfg.out, cfg.kind)
    os.makedirs(path, exist_ok=True)
    return path


def _finish(cfg, checks, files, summary=None):
    path = os.path.join(_outdir(cfg), "checks.csv")
    files.append(checks.write(path, f"{cfg.kind}.checks"))
    return RunReport(cfg.kind, checks, files, summary or {})


# ------------------------------------------------------------------ probe


def random_complex(rng, count):
    """Complex samples with log-uniform moduli and uniform phases."""
    mod = np.exp(rng.uniform(-8, 8, count))
    return mod * np.exp(1j * rng.uniform(0, 2 * np.pi, count))


def activation_checks(rng, count=100_000):
    """Largest deviations of the homogeneity and gate identities."""
    z = random_complex(rng, count)
    alpha = np.exp(rng.uniform(-5, 5, count))
    homog = np.max(np.abs(zrelu(alpha * z) - alpha * zrelu(z)) / np.maximum(1.0, np.abs(alpha * z)))
    dz, _ = zrelu_wirtinger(z)
    gate = np.max(np.abs(zrelu(z) - dz * z))
    return float(homog), float(gate)


def gradient_check_pairs(count, seed, margin=1e-4):
    """Relative errors of analytic vs finite-difference gradients.

    Half the pairs are complex-reaction nets, half real ReLU nets; inputs
    closer than ``margin`` to a gate boundary are redrawn.
    """
    rng = np.random.default_rng(seed)
    errors = []
    k = 0
    while len(errors) < count:
        k += 1
        family = "complex" if len(errors) % 2 == 0 else "real"
        d = int(rng.integers(1, 4))
        widths = [int(w) for w in rng.integers(1, 5, size=int(rng.integers(1, 3)))]
        bias = bool(rng.integers(0, 2))
        if family == "complex":
            net = nw.init_cr([d] + widths + [1], seed=[seed, k], bias=bias)
            if bias:
                net = net.replace(biases=[0.3 * (rng.standard_normal(b.shape) + 1j * rng.standard_normal(b.shape))
                                          for b in net.biases])
            x = rng.standard_normal(2 * d)
        else:
            net = nw.init_r([2 * d] + widths + [1], seed=[seed, k], bias=bias)
            if bias:
                net = net.replace(biases=[0.3 * rng.standard_normal(b.shape) for b in net.biases])
            x = rng.standard_normal(2 * d)
        if nw.gate_margin(net, x) < margin:
            continue
        _, g = nw.value_and_grad(net, x)
        fd = nw.numerical_gradient(net, x)
        a, b = nw.to_vector(g), nw.to_vector(fd)
        scale = max(np.linalg.norm(a), np.linalg.norm(b))
        errors.append(0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale))
    return np.array(errors)


def smatrix_check(seed, sizes=range(2, 65)):
    rng = np.random.default_rng(seed)
    worst = {}
    for n in sizes:
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        res = dyn.smatrix_residuals(v, float(rng.uniform(0.1, 10.0)))
        for key, val in res.items():
            worst[key] = max(worst.get(key, 0.0), val)
    return worst


def run_probe(cfg):
    checks = Checks()
    seed = cfg.seeds[0]
    rng = np.random.default_rng(seed)
    homog, gate = activation_checks(rng)
    tol = cfg.tol("activation")
    checks.add("zrelu positive homogeneity", homog, tol, homog <= tol)
    checks.add("zrelu gate identity", gate, tol, gate <= tol)
    z = random_complex(rng, 100_000)
    z = z[(np.abs(z.real) > 0) & (np.abs(z.imag) > 0)]
    cover = float(np.mean(kept(z) ^ kept(1j * z)))
    checks.add("kept sectors partition phases", cover, 0.0, cover == 1.0)
    odd = float(np.mean(zrelu(-z) == -zrelu(z)))
    checks.add("zrelu is odd (definition)", odd, 0.0, odd == 1.0, "fraction of samples")
    errs = gradient_check_pairs(100, seed)
    tol = cfg.tol("gradient_rel")
    checks.add("gradients vs finite differences", errs.max(), tol, errs.max() < tol, f"{errs.size} pairs")
    x = rng.standard_normal((1000, 2 * cfg.d))
    iso = float(np.max(np.abs(np.linalg.norm(nw.embed(x), axis=1) - np.linalg.norm(x, axis=1))))
    checks.add("embedding isometry", iso, 1e-12, iso <= 1e-12)
    net = nw.init_cr([cfg.d, 6, 5, 1], seed)
    back = nw.denormalize(nw.normalize(net))
    rt = max(float(np.max(np.abs(a - b))) for a, b in zip(net.weights, back.weights))
    checks.add("normalization round trip", rt, 1e-12, rt <= 1e-12)
    worst = smatrix_check(seed)
    tol = cfg.tol("smatrix")
    for key, val in sorted(worst.items()):
        checks.add(f"normalization matrix {key}", val, tol, val <= tol)
    data = dyn.Dataset.random(2 * cfg.d, 16, seed)
    st = dyn.FlowState(nw.normalize(net))
    der = dyn.flow_rhs_cr(st, data)
    tg = dyn.tangency(st, der)
    checks.add("flow tangency", tg, cfg.tol("tangency"), tg <= cfg.tol("tangency"))
    out, pairs = dyn.layer_euler_pairings(net, data.X[0])
    eu = max(abs(p - out) for p in pairs) / max(abs(out), 1e-300)
    checks.add("layer Euler identity", eu, 1e-8, eu <= 1e-8)
    files = []
    return _finish(cfg, checks, files)


# ------------------------------------------------------------------ construct


def run_construct(cfg):
    checks = Checks()
    out = _outdir(cfg)
    p = cfg.params
    rows = []
    for delta in p.get("deltas_1d", [0.1, 0.05, 0.02]):
        approx = con.build_1d_relu(abs, 1.0, 1.0, delta)
        err = con.sup_error_1d(approx, abs, 10_000)
        ok = err <= delta and approx.width <= approx.budget
        checks.add(f"1-D |x| at delta={delta}", err, delta, ok,
                   f"width {approx.width} budget {approx.budget}")
        rows.append(["relu-1d", float(delta), err, approx.width, float(approx.budget), ok])
    target = rad.RadialTarget.alternating(cfg.d, cfg.N, cfg.C2)
    sur = rad.lipschitz_surrogate(target)
    g = rad.surrogate_profile(sur)
    delta = float(p.get("delta_radial", 0.2))
    r = target.inner_radius
    R = 2 * r
    L = max(cfg.N, 1)
    approx = con.build_radial_cr(g, L, r, R, delta, cfg.d, C2=cfg.C2)
    err = con.annulus_sup_error(approx, g, cfg.eval_samples, cfg.seeds[0])
    ok = err <= delta and approx.width <= approx.budget
    checks.add(f"radial surrogate at delta={delta}", err, delta, ok,
               f"width {approx.width} budget {approx.budget:.1f}")
    rows.append(["radial-cr", delta, err, approx.width, float(approx.budget), ok])
    m = rad.build_density(2 * cfg.d)
    sq, se = rad.l2_mu_distance(lambda X: rad.eval_target(target, X), approx, m, cfg.eval_samples,
                                cfg.seeds[0])
    bound = math.sqrt(3) / (cfg.C2 * (2 * cfg.d) ** 0.25) + delta
    checks.add("L2(mu) error of the radial network vs the shell target", math.sqrt(sq), bound,
               math.sqrt(sq) <= bound, f"stderr of squared error {se:.2g}")
    files = [write_csv(os.path.join(out, "construct.csv"), "construct",
                       ["stage", "requested", "achieved", "width", "budget", "passed"], rows)]
    nw.save_network(approx.network, os.path.join(out, "radial_network.json"))
    files.append(os.path.join(out, "radial_network.json"))
    files.append(plotting.plot_construction([(r_[1], r_[2], r_[3]) for r_ in rows],
                                            os.path.join(out, "construct.png")))
    return _finish(cfg, checks, files, {"rows": rows})


# ------------------------------------------------------------------ flow


def flow_networks(cfg, seed):
    widths = cfg.widths or [8, 8]
    cr = nw.init_cr([cfg.d] + widths + [1], seed)
    r = nw.init_r([2 * cfg.d] + widths + [1], seed)
    return {"complex": cr, "real": r}


def run_flow(cfg):
    checks = Checks()
    out = _outdir(cfg)
    p = cfg.params
    h = float(p.get("h", 0.01))
    eta = float(p.get("eta", 1.0))
    seed = cfg.seeds[0]
    data = dyn.Dataset.random(2 * cfg.d, cfg.samples, seed)
    files, traces, growth_rows = [], {}, []
    for family, net in flow_networks(cfg, seed).items():
        for form in dyn.FORMS:
            flow = dyn.Flow(data, eta, form)
            tr = dyn.integrate(dyn.FlowState(nw.normalize(net)), flow, h, cfg.steps)
            rep = dyn.growth_rate_monitor(tr)
            label = f"{family}-{form}"
            traces[label] = tr
            files.append(os.path.join(out, f"trace_{label}.csv"))
            tr.to_csv(files[-1])
            unit = max(float(np.max(np.abs(np.sqrt(np.sum(np.abs(v) ** 2, axis=1)) - 1)))
                       for s in tr.states for v in s.params.directions)
            checks.add(f"{label}: unit directions", unit, cfg.tol("unit_norm"),
                       unit <= cfg.tol("unit_norm"))
            if form == "gradient":
                checks.add(f"{label}: trajectory complete", float(tr.diverged), 0.0, not tr.diverged,
                           tr.reason)
            for k, s in enumerate(tr.states):
                growth_rows.append([family, form, k, float(s.t), int(tr.gate_flips[k]),
                                    float(rep.spread[k]), float(rep.layer_spread[k])])
            stable = rep.stable
            if form == "closed":
                v = rep.max_spread_on(stable)
                # the closed system is not a descent flow and may drive a row
                # scale to zero; the rates are compared on the recorded steps
                note = f"{int(stable.sum())}/{len(tr.states)} gate-stable steps"
                if tr.diverged:
                    note += f", stopped at t={tr.states[-1].t:.3g}: {tr.reason}"
                checks.add(f"{label}: equal row growth rates", v, cfg.tol("growth"),
                           v <= cfg.tol("growth"), note)
            else:
                v = rep.max_layer_spread
                checks.add(f"{label}: equal layer growth rates", v, cfg.tol("growth"),
                           v <= cfg.tol("growth"))
                tg = max(dyn.tangency(s, flow(s)) for s in tr.states)
                checks.add(f"{label}: tangent directions", tg, cfg.tol("tangency"),
                           tg <= cfg.tol("tangency"))
                losses = np.array(tr.losses)
                inc = np.diff(losses)[np.array(tr.gate_flips[1:]) == 0]
                worst = float(inc.max()) if inc.size else 0.0
                checks.add(f"{label}: loss non-increasing on gate-stable steps", worst,
                           cfg.tol("descent"), worst <= cfg.tol("descent"))
    files.append(write_csv(os.path.join(out, "growth.csv"), "flow.growth",
                           ["family", "form", "step", "t", "gate_flips", "row_spread", "layer_spread"],
                           growth_rows))
    files.append(plotting.plot_flow(traces, os.path.join(out, "flow.png")))
    return _finish(cfg, checks, files)


# ------------------------------------------------------------------ symmetry


def affine_check(seed, count=100):
    """Largest entrywise difference between computed and reference matrices."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        rho = complex(rng.normal(), 0.0 if k % 4 == 0 else rng.normal())
        worst = max(worst, float(np.max(np.abs(sym.affine_form(rho) - sym.printed_affine(rho)))))
    return worst


def exact_map_check(seed, inputs=1000):
    """Output and loss changes of permutation and scaling maps on random nets."""
    rng = np.random.default_rng(seed)
    worst_out, worst_loss = 0.0, 0.0
    for family in ("complex", "real"):
        for bias in (False, True):
            if family == "complex":
                net = nw.init_cr([2, 5, 4, 1], [seed, 3], bias=bias)
                dim = 4
            else:
                net = nw.init_r([4, 5, 4, 1], [seed, 3], bias=bias)
                dim = 4
            if bias:
                net = net.replace(biases=[0.5 * rng.standard_normal(b.shape) + (0.5j * rng.standard_normal(b.shape)
                                                                                 if family == "complex" else 0)
                                          for b in net.biases])
            X = rng.standard_normal((inputs, dim))
            data = dyn.Dataset(X, rng.choice([-1.0, 1.0], inputs))
            for l in (0, 1):
                n = net.weights[l].shape[0]
                maps = [sym.exact_equioutput_permutation(net, l, rng.permutation(n)),
                        sym.exact_equioutput_scaling(net, l, int(rng.integers(n)), 2.0),
                        sym.exact_equioutput_scaling(net, l, int(rng.integers(n)), float(rng.uniform(0.1, 10)))]
                for moved in maps:
                    worst_out = max(worst_out, sym.output_change(net, moved, X))
                    worst_loss = max(worst_loss, sym.loss_change(net, moved, data))
    return worst_out, worst_loss


def phi_map_check(seed, inputs=1000):
    """Largest output change over gate-stable inputs and the stable fractions."""
    rng = np.random.default_rng(seed)
    worst, fractions = 0.0, []
    for k in range(8):
        net = nw.init_cr([2, 4, 3, 1], [seed, 5, k])
        X = rng.standard_normal((inputs, 4))
        l = k % 2
        i, j = rng.choice(net.weights[l].shape[0], 2, replace=False)
        rho = complex(rng.uniform(-0.8, 0.8), 0.0 if k < 4 else rng.uniform(-0.8, 0.8))
        moved = sym.apply_phi_move(net, l, rho, int(i), int(j))
        stable = sym.gate_stable(net, l, int(i), int(j), rho, X)
        fractions.append(float(stable.mean()))
        if stable.any():
            worst = max(worst, float(np.max(np.abs(nw.forward(moved, X[stable]) - nw.forward(net, X[stable])))))
    return worst, fractions


def _rho_list(cfg):
    raw = cfg.params.get("rhos", [[0.3, 0.0], [-0.7, 0.0], [0.3, 0.5], [-0.4, 0.3], [0.5, -0.6], [0.0, 0.25]])
    try:
        return [complex(float(a), float(b)) for a, b in raw]
    except (TypeError, ValueError):
        raise ConfigError("params.rhos must be a list of [real, imag] pairs") from None


def _campaign_cell(seed, args):
    family, d, distinct, rhos, g0 = args
    net, data, (i, j) = sym.interpolating_critical_point(family, d, distinct, seed=seed)
    rows = []
    anti = None
    if family == "complex":
        margins = data.y * nw.forward(net, data.X)
        anti = nw.antilinear_grad_cr(net, data.X, -np.exp(-margins) * data.y / data.size).norm()
    for rho in rhos:
        if family == "real" and rho.imag != 0:
            continue
        rep = sym.critical_point_probe(net, sym.EquioutputMap("phi-move", 0, i, j, rho), data, g0=g0)
        rows.append((rho, rep))
    return rows, anti


def dichotomy_verdicts(campaign, g0, real_after, factor, min_imag=0.25):
    """Per-run pass/fail of the critical-point dichotomy.

    A run passes when every real-rho image has gradient norm below
    ``real_after`` and every complex-rho image with |Im rho| >= min_imag
    exceeds factor * max(largest real-rho norm, g0).
    """
    verdicts = {}
    for seed, rows in campaign.items():
        real = [r.after_norm for rho, r in rows if rho.imag == 0]
        cpx = [r.after_norm for rho, r in rows if abs(rho.imag) >= min_imag]
        ref = max(max(real) if real else 0.0, g0)
        ok_real = all(a < real_after for a in real)
        ok_cpx = bool(cpx) and all(a > factor * ref for a in cpx)
        verdicts[seed] = ok_real and ok_cpx
    return verdicts


def run_symmetry(cfg):
    checks = Checks()
    out = _outdir(cfg)
    seed = cfg.seeds[0]
    files = []
    v = affine_check(seed)
    checks.add("phi-move matrices match the reference entrywise", v, 0.0, v == 0.0, "100 rho")
    wo, wl = exact_map_check(seed)
    tol = cfg.tol("exact_map")
    checks.add("permutation/scaling preserve outputs", wo, tol, wo <= tol)
    checks.add("permutation/scaling preserve loss", wl, tol, wl <= tol)
    wp, fr = phi_map_check(seed)
    checks.add("phi-move with compensator on gate-stable inputs", wp, cfg.tol("phi_map"),
               wp <= cfg.tol("phi_map"), "stable fractions " + " ".join(f"{f:.2f}" for f in fr))

    g0 = cfg.tol("g0")
    rhos = _rho_list(cfg)
    distinct = int(cfg.params.get("distinct", 24))
    camp = keyed_map(_campaign_cell, [(s, ("complex", cfg.d, distinct, rhos, g0)) for s in cfg.seeds])
    real_camp = keyed_map(_campaign_cell, [(s, ("real", cfg.d, distinct, rhos, g0)) for s in cfg.seeds])
    rows = []
    for family, results in (("complex", camp), ("real", real_camp)):
        for s in sorted(results):
            for rho, rep in results[s][0]:
                rows.append([family, s, rho.real, rho.imag, rep.before_norm, rep.after_norm,
                             rep.stable_fraction, rep.verdict])
    files.append(write_csv(os.path.join(out, "critical_points.csv"), "symmetry.critical",
                           ["family", "seed", "rho_re", "rho_im", "before_norm", "after_norm",
                            "gate_stable_fraction", "verdict"], rows))
    majority = sum(1 for r in rows if r[0] == "complex" and r[6] > 0.5)
    total = sum(1 for r in rows if r[0] == "complex")
    checks.add("campaign rows with a gate-stable majority", majority, math.ceil(0.9 * total),
               majority >= math.ceil(0.9 * total), f"{majority}/{total} rows")
    before_max = max(rep.before_norm for res in camp.values() for _, rep in res[0])
    checks.add("constructed points are critical", before_max, g0, before_max < g0)
    verdicts = dichotomy_verdicts({s: r[0] for s, r in camp.items()}, g0, cfg.tol("real_after"),
                                  cfg.tol("separation_factor"))
    n_ok = sum(verdicts.values())
    need = math.ceil(0.9 * len(verdicts))
    checks.add("real rho keeps, complex rho breaks criticality", n_ok, need, n_ok >= need,
               f"{n_ok}/{len(verdicts)} runs")
    real_after = max(rep.after_norm for res in real_camp.values() for _, rep in res[0])
    checks.add("real networks: real rho keeps criticality", real_after, cfg.tol("real_after"),
               real_after < cfg.tol("real_after"))
    anti = [camp[s][1] for s in sorted(camp)]
    files.append(write_csv(os.path.join(out, "realified.csv"), "symmetry.realified",
                           ["seed", "antilinear_grad_norm"], [[s, a] for s, a in zip(sorted(camp), anti)]))
    cen_rows = []
    for family in ("complex", "real"):
        cen = sym.group_census(cfg.widths or [1, 2, 3], family=family, seed=seed)
        for n, p, f, c, b in zip(cen.widths, cen.permutations, cen.sign_flips, cen.combined, cen.bounds):
            cen_rows.append([family, n, p, math.factorial(n), f, 2 ** n, c, b])
        if family == "complex":
            ok = all(p == math.factorial(n) for n, p in zip(cen.widths, cen.permutations))
            checks.add("census: every permutation is exact", float(ok), 1.0, ok)
        checks.add(f"census ({family}): count within n! 2^n", float(cen.within_bound), 1.0, cen.within_bound)
    files.append(write_csv(os.path.join(out, "census.csv"), "symmetry.census",
                           ["family", "width", "permutations", "n_factorial", "sign_flips", "two_pow_n",
                            "combined", "bound"], cen_rows))
    imag = np.array([r[3] for r in rows if r[0] == "complex"])
    files.append(plotting.plot_symmetry(np.array([r[4] for r in rows if r[0] == "complex"]),
                                        np.array([r[5] for r in rows if r[0] == "complex"]),
                                        imag, os.path.join(out, "critical_points.png")))
    return _finish(cfg, checks, files, {"verdicts": verdicts})


# ------------------------------------------------------------------ density


def oracle_radial_cdf(n, r_trunc, step=0.01):
    """Radial CDF by composite Simpson integration of the radial profile.

    Uses its own grid and direct profile evaluations (no interpolation), so
    it checks the sampler's tabulated CDF independently.
    """
    from scipy.integrate import cumulative_simpson
    grid = np.arange(0.0, r_trunc + step, step)
    phi = rad.phi_profile(grid, n)
    p = rad.sphere_area(n) * grid ** (n - 1) * phi ** 2
    c = cumulative_simpson(p, x=grid, initial=0.0)
    return grid, c / c[-1]


def run_density(cfg):
    checks = Checks()
    out = _outdir(cfg)
    seed = cfg.seeds[0]
    files, rows = [], []
    for n in cfg.params.get("n_values", [2 * cfg.d]):
        m = rad.build_density(int(n))
        est, se = rad.normalization_estimate(m, cfg.samples, seed)
        tol = cfg.tol("density")
        checks.add(f"n={n}: integral of phi^2", est, tol, abs(est - 1) <= tol, f"stderr {se:.2g}")
        X = rad.sample_mu(m, cfg.eval_samples, seed)
        radii = np.linalg.norm(X, axis=1)
        grid, cdf = oracle_radial_cdf(int(n), m.r_trunc)
        ks = rad.ks_distance(radii, lambda r: np.interp(r, grid, cdf))
        checks.add(f"n={n}: radial KS distance", ks, cfg.tol("ks"), ks < cfg.tol("ks"))
        mean_dev = float(np.max(np.abs(X.mean(axis=0))) / (X.std(axis=0).max() / np.sqrt(X.shape[0])))
        checks.add(f"n={n}: sample mean within 4 sigma", mean_dev, 4.0, mean_dev <= 4.0)
        rows.append([int(n), m.radius, m.r_trunc, m.tail_mass, m.mass, est, se, ks])
        files.append(plotting.plot_density(m.grid, m.cdf, radii, os.path.join(out, f"radial_cdf_n{n}.png"),
                                           f"n = {n}"))
        if cfg.params.get("dump_samples"):
            path = os.path.join(out, f"samples_n{n}.csv")
            rad.write_samples_csv(path, X[: int(cfg.params["dump_samples"])])
            files.append(path)
    files.append(write_csv(os.path.join(out, "density.csv"), "density",
                           ["n", "ball_radius", "r_trunc", "tail_mass", "mass_in_ball", "integral",
                            "stderr", "ks"], rows))
    # surrogate bound on the configured target
    t = rad.RadialTarget.alternating(cfg.d, cfg.N, cfg.C2)
    sur = rad.lipschitz_surrogate(t)
    m = rad.build_density(2 * cfg.d)
    sq, se = rad.l2_mu_distance(lambda X: rad.eval_target(t, X), lambda X: rad.eval_surrogate(sur, X),
                                m, cfg.samples, seed)
    bound = 3 / (cfg.C2 ** 2 * math.sqrt(2 * cfg.d))
    checks.add("surrogate squared L2(mu) gap", sq, bound, sq <= bound, f"stderr {se:.2g}")
    files.append(write_csv(os.path.join(out, "surrogate.csv"), "density.surrogate",
                           ["d", "N", "C2", "squared_gap", "stderr", "bound"],
                           [[cfg.d, cfg.N, cfg.C2, sq, se, bound]]))
    return _finish(cfg, checks, files)


# ------------------------------------------------------------------ separation


@dataclass
class SeparationResult:
    """Per (seed, budget, family) errors plus the per-budget summaries."""

    rows: list
    summary: dict
    baseline: float

    def medians(self, family):
        return {b: s[0] for (b, f), s in self.summary.items() if f == family}


def _separation_cell(key, args):
    seed, budget = key
    d, N, C2, samples, eval_samples, lr, steps, out_scale = args
    q = real_width_for_budget(budget, d)
    pair = match_budget(q, d)
    target = rad.RadialTarget.alternating(d, N, C2)
    m = rad.build_density(2 * d)
    X = rad.sample_mu(m, samples, [seed, 11])
    y = rad.eval_target(target, X)
    cr, r = init_pair(pair, seed, out_scale)
    if cr.parameter_count() - pair.masked - 1 != r.parameter_count():
        raise RuntimeError("budget mismatch between families")
    masks = imaginary_masks(d, pair.m, pair.masked)
    res = {}
    for family, net, mk in (("complex", cr, masks), ("real", r, None)):
        tr = train_squared(net, X, y, lr, steps, masks=mk)
        est, se = rad.l2_mu_distance(lambda Z: rad.eval_target(target, Z), lambda Z: nw.forward(tr.net, Z),
                                     m, eval_samples, [seed, 12])
        width = pair.m if family == "complex" else pair.q
        res[family] = (width, pair.real_count, est, se, tr.best_loss, tr.rejected)
    return res


def run_separation(cfg):
    checks = Checks()
    out = _outdir(cfg)
    if cfg.d > 4:
        raise ConfigError("separation runs are capped at d <= 4")
    budgets = cfg.budgets or [97, 193, 409]
    p = cfg.params
    args = (cfg.d, cfg.N, cfg.C2, cfg.samples, cfg.eval_samples, cfg.learning_rate, cfg.steps,
            float(p.get("out_scale", 0.01)))
    cells = keyed_map(_separation_cell, [((s, b), args) for s in cfg.seeds for b in budgets])
    rows = []
    for (s, b) in sorted(cells):
        for family in ("complex", "real"):
            width, count, est, se, loss, rej = cells[(s, b)][family]
            rows.append([s, b, family, width, count, est, se, loss, rej])
    parity = all(cells[k]["complex"][1] == cells[k]["real"][1] for k in cells)
    checks.add("matched real-parameter counts", float(parity), 1.0, parity)
    summary = {}
    for b in budgets:
        for family in ("complex", "real"):
            errs = np.array([r[5] for r in rows if r[1] == b and r[2] == family])
            q1, med, q3 = np.percentile(errs, [25, 50, 75])
            summary[(b, family)] = (float(med), float(q1), float(q3), int(cells[(cfg.seeds[0], b)][family][1]))
    t = rad.RadialTarget.alternating(cfg.d, cfg.N, cfg.C2)
    m = rad.build_density(2 * cfg.d)
    base, _ = rad.l2_mu_distance(lambda Z: rad.eval_target(t, Z), lambda Z: np.zeros(len(Z)), m,
                                 cfg.eval_samples, [cfg.seeds[0], 12])
    for b in budgets:
        c, r = summary[(b, "complex")], summary[(b, "real")]
        checks.add(f"budget {c[3]}: complex median below real median", c[0] - r[0], 0.0, c[0] < r[0],
                   f"complex {c[0]:.4g} real {r[0]:.4g}")
    big = budgets[-1]
    c, r = summary[(big, "complex")], summary[(big, "real")]
    checks.add(f"budget {c[3]}: interquartile ranges separate", c[2] - r[1], 0.0, c[2] < r[1],
               f"complex [{c[1]:.4g}, {c[2]:.4g}] real [{r[1]:.4g}, {r[2]:.4g}]")
    files = [write_csv(os.path.join(out, "separation.csv"), "separation",
                       ["seed", "budget", "family", "width", "params", "l2_error", "stderr", "train_loss",
                        "rejected_steps"], rows)]
    srows = [[b, f, v[3], v[0], v[1], v[2]] for (b, f), v in sorted(summary.items())]
    files.append(write_csv(os.path.join(out, "summary.csv"), "separation.summary",
                           ["budget", "family", "params", "median", "q1", "q3"], srows))
    prow = []
    for (b, f), v in sorted(summary.items()):
        errs = [r_[6] for r_ in rows if r_[1] == b and r_[2] == f]
        prow.append([f, v[3], v[0], float(np.median(errs))])
    files.append(write_csv(os.path.join(out, "plot_data.csv"), "separation.plot",
                           ["family", "x", "y", "stderr"], prow))
    fig = {}
    for (b, f), v in summary.items():
        fig.setdefault(f, []).append((v[3], v[0], v[1], v[2]))
    files.append(plotting.plot_separation(fig, os.path.join(out, "separation.png"), baseline=base))
    result = SeparationResult(rows, summary, base)
    return _finish(cfg, checks, files, {"result": result})


RUNNERS = {
    "probe": run_probe,
    "construct": run_construct,
    "separation": run_separation,
    "flow": run_flow,
    "symmetry": run_symmetry,
    "density": run_density,
}


def run(cfg):
    try:
        runner = RUNNERS[cfg.kind]
    except KeyError:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}") from None
    return runner(cfg)
