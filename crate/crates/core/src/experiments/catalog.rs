//! The experiment implementations. Defaults reproduce the acceptance settings.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{key, rendered_bytes, run, Experiment, Outcome, Params, Table};
use crate::error::{Error, Result};
use crate::field::{MatrixField, SpatialSymbol};
use crate::fio::{energy_table, eigen_gap_check, l2_opnorm, phase_gap_check_torus, wavetype_symbol, WaveOperator};
use crate::fit::{FitReport, Verdict};
use crate::fourier::{evaluate, fourier_transform, inverse_transform};
use crate::funcalc::{contour_calculus, garding_feasibility, hulanicki_check, spectral_function, Contour};
use crate::group::{haar_grid, Dual, Group, GroupPoint};
use crate::linalg::{self, c, re, CMat, C64};
use crate::subelliptic::{
    dependence_profile, equiv_weight_check, kernel_profile, seminorm, weyl_slope, KernelProfileConfig, SeminormSpec,
    SubLaplacian, WeylMode,
};
use crate::symbol::{extract_symbol_field, laplacian_symbol, operator_matrix, symbol_of_matrix, Calculus};
use crate::traces::{
    default_psi, dixmier_estimate, heat_slope, heat_trace, psi_plateau, regularized_trace_fit, schatten_probe,
    SpectrumLadder,
};

pub(super) static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "plancherel",
        description: "Fourier round trip and Plancherel identity for a random band-limited field",
        keys: &[
            key("group", "SU2", "SU2, T1, T2 or T3"),
            key("cutoff", "8", "band limit (spin on SU2, |k| on tori)"),
            key("tolerance", "1e-8", "relative error bound"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("blocks", "index,dim,roundtrip_error,block_energy")],
        run: plancherel,
    },
    Experiment {
        name: "symbol-recovery",
        description: "extract the symbols of X3 and the Laplacian on SU2 from finite-difference operators",
        keys: &[
            key("cutoff", "6", "largest spin"),
            key("node", "17", "grid node where the symbol is read off"),
            key("step", "2e-3", "finite-difference step along the flow"),
            key("tolerance", "1e-6", "max abs error bound"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("errors", "spin,x3_error,laplacian_error")],
        run: symbol_recovery,
    },
    Experiment {
        name: "dependence",
        description: "growth of |(1+L12)^-1 X3^2| and the order-two class test of 1+L23",
        keys: &[
            key("spins", "10,15,20,25,30,35,40,45,50,55,60", "spins l of the profile"),
            key("slope", "1", "expected log-log slope"),
            key("slope_tolerance", "0.1", "absolute slope tolerance"),
            key("ladder", "4,6,8,12,16", "cutoff ladder of the class test"),
            key("fail_above", "0.9", "growth exponent that counts as failure"),
            key("pass_below", "0.05", "growth exponent that counts as membership"),
        ],
        cutoff_key: None,
        tables: &[
            ("profile", "spin,norm,closed_form"),
            ("classes", "cutoff,sup_weight_l12,sup_weight_l23"),
        ],
        run: dependence,
    },
    Experiment {
        name: "heat-slope",
        description: "log-log slope of the heat trace for two sub-Laplacians on SU2",
        keys: &[
            key("first", "L12", "first sub-Laplacian"),
            key("second", "laplacian", "second sub-Laplacian"),
            key("t_min", "1e-3", "smallest time"),
            key("t_max", "1e-2", "largest time"),
            key("t_count", "7", "log-spaced times"),
            key("cutoff", "auto", "spin cutoff, or auto to grow until the tail is negligible"),
            key("tolerance", "0.1", "relative tolerance on -Q/2"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("traces", "t,trace_first,tail_first,trace_second,tail_second")],
        run: heat_slope_exp,
    },
    Experiment {
        name: "weyl",
        description: "eigenvalue counting slope log N(lambda) / log lambda against Q",
        keys: &[
            key("first", "L12", "first sub-Laplacian"),
            key("second", "laplacian", "second sub-Laplacian"),
            key("lambda_min", "10", "smallest lambda"),
            key("lambda_max", "1000", "largest lambda"),
            key("lambda_count", "9", "log-spaced lambdas"),
            key("mode", "multiplicity", "multiplicity or full-blocks"),
            key("tolerance", "0.1", "relative tolerance on Q"),
        ],
        cutoff_key: None,
        tables: &[("counts", "lambda,count_first,count_second")],
        run: weyl,
    },
    Experiment {
        name: "regularized-trace",
        description: "log against power model for Tr(A exp(-t M^q)) at order -Q",
        keys: &[
            key("sub", "laplacian", "sub-Laplacian on SU2"),
            key("order", "auto", "order m of A = M^m, auto for -Q"),
            key("qs", "1,2", "exponents q"),
            key("t_min", "1e-4", "smallest time"),
            key("t_max", "1e-2", "largest time"),
            key("t_count", "7", "log-spaced times"),
            key("tolerance", "0.15", "relative tolerance on the slope"),
        ],
        cutoff_key: None,
        tables: &[("traces", "q,t,trace")],
        run: regularized_trace_exp,
    },
    Experiment {
        name: "dixmier",
        description: "(p-1) Tr(A^p) extrapolated to p = 1 for A = M^-Q",
        keys: &[
            key("sub", "L12", "sub-Laplacian on SU2"),
            key("reach", "40", "partial-sum reach in M eigenvalue; the rest is the Weyl tail"),
            key("stability", "0.1", "allowed change between the two finest rungs"),
            key("lower_order_ratio", "0.1", "bound on the order -Q-1 estimate relative to order -Q"),
        ],
        cutoff_key: Some("reach"),
        tables: &[("rungs", "order,p,estimate")],
        run: dixmier,
    },
    Experiment {
        name: "schatten",
        description: "convergence probe for Tr(A^r) at orders Q/r + offset and Q/r",
        keys: &[
            key("sub", "L12", "sub-Laplacian on SU2"),
            key("rs", "1,2", "Schatten exponents r"),
            key("offset", "0.5", "order margin of the convergent case"),
            key("cutoffs", "8,16,32,64,128,256,512", "spin cutoffs of the partial sums"),
        ],
        cutoff_key: None,
        tables: &[("partial_sums", "r,order,cutoff,partial_sum")],
        run: schatten,
    },
    Experiment {
        name: "class-powers",
        description: "class seminorms of (1+L)^s against the weight of L",
        keys: &[
            key("sub", "L12", "sub-Laplacian on SU2"),
            key("power", "0.5", "power s of 1+L; the order is 2s"),
            key("alpha_order", "2", "largest |alpha|"),
            key("ladder", "8,12,16,24,32,48,64", "cutoff ladder"),
            key("threshold", "0.05", "largest admissible growth exponent"),
        ],
        cutoff_key: None,
        tables: &[("sups", "entry,alpha_1,alpha_2,alpha_3,cutoff,sup,exponent")],
        run: class_powers,
    },
    Experiment {
        name: "composition",
        description: "composition expansion and parametrix remainders against dense operator products on T1",
        keys: &[
            key("band", "48", "symbol cutoff and dense band limit"),
            key("mid_low", "8", "lower |k| of the compared band"),
            key("mid_high", "16", "upper |k| of the compared band"),
            key("expansion_order", "2", "largest N of the composition expansion"),
            key("parametrix_order", "3", "largest N of the parametrix"),
            key("parametrix_band", "32", "band limit of the parametrix products"),
            key("factor", "2", "required decrease per composition step"),
        ],
        cutoff_key: Some("band"),
        tables: &[("remainders", "kind,order,remainder")],
        run: composition,
    },
    Experiment {
        name: "garding",
        description: "Garding pair for (2+cos x) M^2 and for 1+L on T1",
        keys: &[
            key("band", "16", "band limit of the inequality"),
            key("symbol_cutoff", "32", "cutoff of the symbol (at least twice the band)"),
            key("budget", "1e3", "largest admissible C2"),
            key("min_c1", "0.5", "required C1 for the variable-coefficient symbol"),
        ],
        cutoff_key: Some("band"),
        tables: &[("pairs", "case,c1,c2,generalized_min,ellipticity_constant")],
        run: garding,
    },
    Experiment {
        name: "contour",
        description: "keyhole contour z^-1/2 against eigendecomposition powers of random positive diagonal symbols",
        keys: &[
            key("cutoff", "4", "spin cutoff on SU2"),
            key("per_piece", "16", "nodes on each of the four contour pieces"),
            key("trials", "5", "random symbols"),
            key("log_min", "-0.5", "log10 of the smallest eigenvalue"),
            key("log_max", "2", "log10 of the largest eigenvalue"),
            key("power", "-0.5", "exponent of F(z) = z^power"),
            key("tolerance", "1e-6", "max abs error bound"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("trials", "trial,min_eigenvalue,max_eigenvalue,error")],
        run: contour,
    },
    Experiment {
        name: "fio",
        description: "wavetype norms, wave energy conservation and torus phase gaps",
        keys: &[
            key("cutoff", "2", "spin cutoff of the wavetype operator"),
            key("phase_scale", "0.37", "Phi = phase_scale * L12 symbol"),
            key("wave_cutoff", "3", "spin cutoff of the wave data"),
            key("t_count", "11", "equally spaced times in [0, 1]"),
            key("torus_cutoff", "6", "cutoff of the phase-gap check"),
            key("norm_tolerance", "1e-6", "bound on |norm - sup|"),
            key("drift_tolerance", "1e-8", "bound on the relative energy drift"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("energy", "t,energy,drift"), ("phase_gap", "case,min_ratio,max_ratio")],
        run: fio,
    },
    Experiment {
        name: "kernel-profile",
        description: "gauge-radius singularity of the kernel of M^m",
        keys: &[
            key("sub", "L12", "sub-Laplacian (diagonal in the standard basis)"),
            key("order", "-3", "order m of the multiplier"),
            key("window", "32", "spectral window W (profile compared at W and 2W)"),
            key("r_min", "0.05", "smallest gauge radius"),
            key("r_max", "0.5", "largest gauge radius"),
            key("r_count", "8", "log-spaced radii"),
            key("tolerance", "0.25", "absolute tolerance on -(Q+m)"),
            key("stability", "0.1", "relative exponent change under window doubling"),
        ],
        cutoff_key: Some("window"),
        tables: &[("profile", "radius,sup_kernel")],
        run: kernel,
    },
    Experiment {
        name: "determinism",
        description: "reruns another experiment with the same seed and compares output bytes",
        keys: &[
            key("target", "plancherel", "experiment to rerun with its defaults"),
            key("runs", "2", "number of runs"),
        ],
        cutoff_key: None,
        tables: &[("files", "file,bytes,identical")],
        run: determinism,
    },
    Experiment {
        name: "weight-equivalence",
        description: "<xi>^(1/kappa) <= C M <= C' <xi> along a dyadic ladder",
        keys: &[
            key("sub", "L12", "sub-Laplacian"),
            key("group", "SU2", "group"),
            key("kappa", "2", "step of the system"),
            key("cutoff", "32", "dual cutoff"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("ratios", "bracket,ratio")],
        run: weight_equivalence,
    },
    Experiment {
        name: "eigen-gap",
        description: "eigenvalue gap 1-(lambda/lambda')^tau of the torus Laplacian against its closed form",
        keys: &[
            key("tau", "1", "exponent"),
            key("cutoff", "20", "largest |k|"),
        ],
        cutoff_key: Some("cutoff"),
        tables: &[("gap", "tau,epsilon0,closed_form")],
        run: eigen_gap,
    },
    Experiment {
        name: "psi-trace",
        description: "psi-trace of M^-Q normalized by the Weyl constant, constant in t",
        keys: &[
            key("sub", "L12", "sub-Laplacian on SU2"),
            key("q", "2", "exponent q"),
            key("t_min", "1e-3", "smallest time"),
            key("t_max", "1e-2", "largest time"),
            key("t_count", "4", "log-spaced times"),
        ],
        cutoff_key: None,
        tables: &[("plateau", "t,ratio")],
        run: psi_trace_exp,
    },
    Experiment {
        name: "hulanicki",
        description: "uniform class bounds of f(tL) for f = (1+x)^(-1/2) on T1",
        keys: &[
            key("t_count", "7", "times 2^0 .. 2^-(t_count-1)"),
            key("ladder", "4,8,16,32", "cutoff ladder"),
        ],
        cutoff_key: None,
        tables: &[("exponents", "entry,exponent")],
        run: hulanicki,
    },
];

fn logspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(a > 0.0) || !(b >= a) {
        return Err(Error::Invalid(format!("bad log range [{a}, {b}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect())
}

fn rng(p: &Params) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(p.seed)
}

fn su2_sub(p: &Params, name: &str) -> Result<SubLaplacian> {
    p.sub_laplacian(Group::Su2, name)
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

// ---------------------------------------------------------------------------

fn plancherel(p: &Params) -> Result<Outcome> {
    let g = p.group("group")?;
    let cut = p.f64("cutoff")?;
    let tol = p.f64("tolerance")?;
    let grid = haar_grid(g, cut)?;
    let dual = Dual::new(g, cut)?;
    let mut r = rng(p);
    let fh = MatrixField::from_fn(&dual, |xi| {
        CMat::from_fn(xi.dim(), xi.dim(), |_, _| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
    });
    let f = inverse_transform(&fh, &grid)?;
    let back = fourier_transform(&grid, &f, &dual)?;
    let scale = fh.blocks.iter().map(|b| b.iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
    let round_trip = back.max_abs_diff(&fh) / scale;
    let energy = fh.plancherel_norm();
    let plancherel = (grid.l2_norm(&f) - energy).abs() / energy;
    let mut table = Table::new("blocks", &["index", "dim", "roundtrip_error", "block_energy"]);
    for ((xi, a), b) in fh.iter().zip(&back.blocks) {
        let d = xi.dim() as f64;
        table.push(vec![xi.index(), d, linalg::max_abs_diff(a, b), d * linalg::hs_norm_sqr(a)]);
    }
    let mut out = Outcome::new(p);
    let target = format!("< {tol:e}");
    out.check("roundtrip_relative_error", round_trip, &target, round_trip < tol)
        .check("plancherel_relative_error", plancherel, &target, plancherel < tol)
        .table(table);
    Ok(out)
}

fn symbol_recovery(p: &Params) -> Result<Outcome> {
    let cut = p.f64("cutoff")?;
    let node = p.usize("node")?;
    let h = p.f64("step")?;
    let tol = p.f64("tolerance")?;
    let g = Group::Su2;
    let grid = haar_grid(g, cut)?;
    let dual = Dual::new(g, cut)?;
    if node >= grid.len() {
        return Err(Error::Invalid(format!("node {node} outside a grid of {}", grid.len())));
    }
    let x0 = grid.nodes[node].clone();
    // stencil points x0 exp(s h Y_k), s = -2, -1, 1, 2
    let stencil: Vec<Vec<GroupPoint>> = (0..3)
        .map(|k| {
            [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|&s| {
                    let mut u = [0.0; 3];
                    u[k] = s * h;
                    g.multiply(&x0, &g.exp(&u))
                })
                .collect()
        })
        .collect();
    let only_at_node = |v: C64, n: usize| {
        let mut out = vec![re(0.0); n];
        out[node] = v;
        out
    };
    // the operators act on the band-limited interpolant of the samples
    let x3 = |f: &[C64]| -> Vec<C64> {
        let fh = fourier_transform(&grid, f, &dual).expect("grid is exact at the cutoff");
        let v: Vec<C64> = stencil[2].iter().map(|x| evaluate(&fh, x)).collect();
        only_at_node((v[0] - v[1] * 8.0 + v[2] * 8.0 - v[3]) / (12.0 * h), f.len())
    };
    let lap = |f: &[C64]| -> Vec<C64> {
        let fh = fourier_transform(&grid, f, &dual).expect("grid is exact at the cutoff");
        let centre = evaluate(&fh, &x0);
        let mut acc = re(0.0);
        for pts in &stencil {
            let v: Vec<C64> = pts.iter().map(|x| evaluate(&fh, x)).collect();
            acc += (-v[0] + v[1] * 16.0 - centre * 30.0 + v[2] * 16.0 - v[3]) / (12.0 * h * h);
        }
        only_at_node(-acc, f.len())
    };
    let got_x3 = extract_symbol_field(x3, &grid, &dual, node)?;
    let got_lap = extract_symbol_field(lap, &grid, &dual, node)?;
    // closed forms: diag(-i n), n = -l..l, and l(l+1) I
    let want_x3 = MatrixField::from_diag_fn(&dual, |xi| {
        let l = xi.index();
        (0..xi.dim()).map(|i| c(0.0, -(i as f64 - l))).collect()
    });
    let want_lap = laplacian_symbol(&dual);
    let mut table = Table::new("errors", &["spin", "x3_error", "laplacian_error"]);
    let (mut e3, mut el) = (0.0f64, 0.0f64);
    for (k, xi) in dual.irreps.iter().enumerate() {
        let a = linalg::max_abs_diff(&got_x3.blocks[k], &want_x3.blocks[k]);
        let b = linalg::max_abs_diff(&got_lap.blocks[k], &want_lap.blocks[k]);
        e3 = e3.max(a);
        el = el.max(b);
        table.push(vec![xi.index(), a, b]);
    }
    let mut out = Outcome::new(p);
    let target = format!("< {tol:e}");
    out.check("x3_max_error", e3, &target, e3 < tol)
        .check("laplacian_max_error", el, &target, el < tol)
        .table(table);
    Ok(out)
}

fn dependence(p: &Params) -> Result<Outcome> {
    let spins = p.ladder("spins")?;
    let slope = p.f64("slope")?;
    let stol = p.f64("slope_tolerance")?;
    let ladder = p.ladder("ladder")?;
    let fail_above = p.f64("fail_above")?;
    let pass_below = p.f64("pass_below")?;
    let two_ls: Vec<u32> = spins.iter().map(|l| (2.0 * l).round() as u32).collect();
    let prof = dependence_profile(&two_ls)?;
    let mut table = Table::new("profile", &["spin", "norm", "closed_form"]);
    for &(l, v) in &prof {
        table.push(vec![l, v, l * l / (l + 1.0)]);
    }
    let fit = FitReport::loglog("dependence", prof).labels("spin", "norm");
    let l12 = SubLaplacian::su2_pair(1, 2)?;
    let l23 = SubLaplacian::su2_pair(2, 3)?;
    let top = *ladder.last().expect("non-empty ladder");
    let dual = Dual::new(Group::Su2, top)?;
    let grid = Arc::new(haar_grid(Group::Su2, 1.0)?);
    let a = SpatialSymbol::invariant(&grid, l23.symbol(&dual).add(&MatrixField::identity(&dual))?);
    let spec = SeminormSpec::up_to(1.0, 0.0, 2.0, 3, 0, 0, ladder.clone());
    let r12 = seminorm(&a, &l12, &spec)?;
    let r23 = seminorm(&a, &l23, &spec)?;
    let mut classes = Table::new("classes", &["cutoff", "sup_weight_l12", "sup_weight_l23"]);
    for (i, &cut) in ladder.iter().enumerate() {
        classes.push(vec![cut, r12.entries[0].sups[i], r23.entries[0].sups[i]]);
    }
    let mut out = Outcome::new(p);
    out.check(
        "profile_slope",
        fit.exponent,
        &format!("{slope} +- {stol}"),
        within(fit.exponent, slope, stol),
    )
    .check(
        "exponent_against_l12",
        r12.max_exponent,
        &format!(">= {fail_above} (not in the class)"),
        r12.max_exponent >= fail_above,
    )
    .check(
        "exponent_against_l23",
        r23.max_exponent,
        &format!("<= {pass_below} (in the class)"),
        r23.max_exponent <= pass_below,
    )
    .fit(fit)
    .table(table)
    .table(classes);
    Ok(out)
}

fn heat_slope_exp(p: &Params) -> Result<Outcome> {
    let a = su2_sub(p, "first")?;
    let b = su2_sub(p, "second")?;
    let ts = logspace(p.f64("t_min")?, p.f64("t_max")?, p.usize("t_count")?)?;
    let cutoff = match p.text("cutoff")?.as_str() {
        "auto" => None,
        _ => Some(p.f64("cutoff")?),
    };
    let tol = p.f64("tolerance")?;
    let la = SpectrumLadder::new(&a)?;
    let lb = SpectrumLadder::new(&b)?;
    let mut table = Table::new("traces", &["t", "trace_first", "tail_first", "trace_second", "tail_second"]);
    let mut sa = Vec::new();
    let mut sb = Vec::new();
    for &t in &ts {
        let va = heat_trace(&la, t, cutoff)?;
        let vb = heat_trace(&lb, t, cutoff)?;
        table.push(vec![t, va.value, va.tail, vb.value, vb.tail]);
        sa.push((t, va.value));
        sb.push((t, vb.value));
    }
    let fa = match cutoff {
        None => heat_slope(&la, &ts)?,
        Some(_) => FitReport::loglog(&format!("heat-{}", a.name), sa).labels("t", "trace"),
    };
    let fb = match cutoff {
        None => heat_slope(&lb, &ts)?,
        Some(_) => FitReport::loglog(&format!("heat-{}", b.name), sb).labels("t", "trace"),
    };
    let mut out = Outcome::new(p);
    for (sub, fit) in [(&a, fa), (&b, fb)] {
        let e = -sub.q() / 2.0;
        let band = tol * e.abs();
        out.check(
            &format!("slope_{}", sub.name),
            fit.exponent,
            &format!("{e} +- {band}"),
            within(fit.exponent, e, band),
        );
        out.fit(fit);
    }
    out.table(table);
    Ok(out)
}

fn weyl(p: &Params) -> Result<Outcome> {
    let a = su2_sub(p, "first")?;
    let b = su2_sub(p, "second")?;
    let lambdas = logspace(p.f64("lambda_min")?, p.f64("lambda_max")?, p.usize("lambda_count")?)?;
    let mode = match p.text("mode")?.as_str() {
        "multiplicity" => WeylMode::Multiplicity,
        "full-blocks" => WeylMode::FullBlocks,
        other => return Err(Error::Invalid(format!("mode: unknown counting mode '{other}'"))),
    };
    let tol = p.f64("tolerance")?;
    let fa = weyl_slope(&a, &lambdas, mode)?;
    let fb = weyl_slope(&b, &lambdas, mode)?;
    let mut table = Table::new("counts", &["lambda", "count_first", "count_second"]);
    for (x, y) in fa.samples.iter().zip(&fb.samples) {
        table.push(vec![x.0, x.1, y.1]);
    }
    let mut out = Outcome::new(p);
    for (sub, fit) in [(&a, fa), (&b, fb)] {
        let q = sub.q();
        out.check(
            &format!("slope_{}", sub.name),
            fit.exponent,
            &format!("{q} +- {}", tol * q),
            within(fit.exponent, q, tol * q),
        );
        out.fit(fit);
    }
    out.table(table);
    Ok(out)
}

fn order_or_auto(p: &Params, name: &str, auto: f64) -> Result<f64> {
    if p.text(name)? == "auto" {
        Ok(auto)
    } else {
        p.f64(name)
    }
}

fn regularized_trace_exp(p: &Params) -> Result<Outcome> {
    let sub = su2_sub(p, "sub")?;
    let m = order_or_auto(p, "order", -sub.q())?;
    let qs = p.list("qs")?;
    let ts = logspace(p.f64("t_min")?, p.f64("t_max")?, p.usize("t_count")?)?;
    let tol = p.f64("tolerance")?;
    let ladder = SpectrumLadder::new(&sub)?;
    let critical = (m + sub.q()).abs() < 1e-9;
    let mut table = Table::new("traces", &["q", "t", "trace"]);
    let mut out = Outcome::new(p);
    for &q in &qs {
        let fit = regularized_trace_fit(&ladder, m, q, &ts)?;
        for &(t, v) in &fit.samples {
            table.push(vec![q, t, v]);
        }
        let lr = fit.get_extra("log_residual").unwrap_or(f64::NAN);
        let pr = fit.get_extra("power_residual").unwrap_or(f64::NAN);
        let expected = fit.get_extra("expected").unwrap_or(f64::NAN);
        let (model_name, model_ok) = if critical { ("log", lr < pr) } else { ("power", pr <= lr) };
        out.check(
            &format!("q{q}_log_over_power_residual"),
            lr / pr,
            if critical { "< 1 (log model)" } else { ">= 1 (power model)" },
            model_ok,
        );
        out.check(
            &format!("q{q}_slope"),
            fit.exponent,
            &format!("{expected} within {}% ({model_name} model)", tol * 100.0),
            fit.model == model_name && within(fit.exponent, expected, tol * expected.abs()),
        );
        out.fit(fit);
    }
    out.table(table);
    Ok(out)
}

fn dixmier(p: &Params) -> Result<Outcome> {
    let sub = su2_sub(p, "sub")?;
    let reach = p.f64("reach")?;
    let stab = p.f64("stability")?;
    let ratio_bound = p.f64("lower_order_ratio")?;
    let ladder = SpectrumLadder::new(&sub)?;
    let q = sub.q();
    let main = dixmier_estimate(&ladder, |w| w.powf(-q), reach)?;
    let lower = dixmier_estimate(&ladder, |w| w.powf(-q - 1.0), reach)?;
    let mut table = Table::new("rungs", &["order", "p", "estimate"]);
    for (order, est) in [(-q, &main), (-q - 1.0, &lower)] {
        for &(pp, v) in &est.rungs {
            table.push(vec![order, pp, v]);
        }
        table.push(vec![order, 1.0, est.extrapolant]);
    }
    let ratio = lower.extrapolant.abs() / main.extrapolant;
    let mut out = Outcome::new(p);
    out.check(
        "extrapolant",
        main.extrapolant,
        "finite and > 0",
        main.extrapolant.is_finite() && main.extrapolant > 0.0,
    )
    .check("stability", main.stability, &format!("<= {stab}"), main.stability <= stab)
    .check(
        "lower_order_ratio",
        ratio,
        &format!("< {ratio_bound}"),
        ratio < ratio_bound,
    )
    .check("weyl_constant", main.weyl_c, "reported", true)
    .table(table);
    Ok(out)
}

fn schatten(p: &Params) -> Result<Outcome> {
    let sub = su2_sub(p, "sub")?;
    let rs = p.list("rs")?;
    let offset = p.f64("offset")?;
    let cutoffs = p.ladder("cutoffs")?;
    let ladder = SpectrumLadder::new(&sub)?;
    let q = sub.q();
    let mut table = Table::new("partial_sums", &["r", "order", "cutoff", "partial_sum"]);
    let mut out = Outcome::new(p);
    for &r in &rs {
        for (m, want) in [(q / r + offset, Verdict::Converges), (q / r, Verdict::Diverges)] {
            let rep = schatten_probe(&ladder, |w| w.powf(-m), r, &cutoffs)?;
            for &(cut, s) in &rep.samples {
                table.push(vec![r, m, cut, s]);
            }
            let ratio = rep.get_extra("increment_ratio").unwrap_or(f64::NAN);
            let word = if want == Verdict::Converges { "CONVERGES" } else { "DIVERGES" };
            out.check(
                &format!("r{r}_order{m}_increment_ratio"),
                ratio,
                &format!("{word} (ratio {} 0.9)", if want == Verdict::Converges { "<=" } else { ">" }),
                rep.verdict == want,
            );
            out.fit(rep);
        }
    }
    out.table(table);
    Ok(out)
}

fn class_powers(p: &Params) -> Result<Outcome> {
    let sub = su2_sub(p, "sub")?;
    let s = p.f64("power")?;
    let order = p.usize("alpha_order")?;
    let ladder = p.ladder("ladder")?;
    let threshold = p.f64("threshold")?;
    let top = *ladder.last().expect("non-empty ladder");
    let dual = Dual::new(Group::Su2, top + order as f64)?;
    let grid = Arc::new(haar_grid(Group::Su2, 1.0)?);
    let m = 2.0 * s;
    let sym = SpatialSymbol::invariant(&grid, sub.m_weight_field(m, &dual));
    let spec = SeminormSpec::up_to(1.0, 0.0, m, 3, order, 0, ladder);
    let rep = seminorm(&sym, &sub, &spec)?;
    let mut table = Table::new("sups", &["entry", "alpha_1", "alpha_2", "alpha_3", "cutoff", "sup", "exponent"]);
    for (i, e) in rep.entries.iter().enumerate() {
        for (&cut, &v) in e.cutoffs.iter().zip(&e.sups) {
            table.push(vec![
                i as f64,
                e.alpha[0] as f64,
                e.alpha[1] as f64,
                e.alpha[2] as f64,
                cut,
                v,
                e.exponent,
            ]);
        }
    }
    let mut out = Outcome::new(p);
    out.check(
        "max_growth_exponent",
        rep.max_exponent,
        &format!("<= {threshold}"),
        rep.max_exponent <= threshold && rep.verdict == Verdict::Pass,
    )
    .table(table);
    Ok(out)
}

/// Largest entry difference over `mid_low <= |k| <= mid_high` and all nodes.
fn mid_band_distance(a: &SpatialSymbol, b: &SpatialSymbol, lo: i32, hi: i32) -> f64 {
    let nodes = if a.is_invariant() && b.is_invariant() { 1 } else { a.grid.len() };
    let mut m = 0.0f64;
    for n in 0..nodes {
        let fb = b.at(n);
        for (xi, blk) in a.at(n).iter() {
            let k = xi.torus_k().expect("torus irrep")[0].abs();
            if (lo..=hi).contains(&k) {
                if let Some(other) = fb.get(&xi.label) {
                    m = m.max(linalg::max_abs_diff(blk, other));
                }
            }
        }
    }
    m
}

fn composition(p: &Params) -> Result<Outcome> {
    let band = p.f64("band")?;
    let lo = p.usize("mid_low")? as i32;
    let hi = p.usize("mid_high")? as i32;
    let n_comp = p.usize("expansion_order")?;
    let n_par = p.usize("parametrix_order")?;
    let par_band = p.f64("parametrix_band")?;
    let factor = p.f64("factor")?;
    let g = Group::Torus(1);
    let grid = Arc::new(haar_grid(g, 2.0 * band + 8.0)?);
    let dual = Dual::new(g, band)?;
    let scalar = |f: fn(f64, f64) -> f64| {
        SpatialSymbol::from_fn(&grid, &dual, move |x, xi| {
            let k = xi.torus_k().expect("torus irrep")[0] as f64;
            linalg::diag_real(&[f(x.coords()[0], k)])
        })
    };
    let a = scalar(|x, k| (2.0 + x.cos()) * (1.0 + k * k));
    let b = scalar(|x, k| (1.0 + 0.5 * x.sin()) / (1.0 + k * k).sqrt());
    let (ma, basis) = operator_matrix(&a, band)?;
    let (mb, _) = operator_matrix(&b, band)?;
    let exact = symbol_of_matrix(&(&ma * mb), &basis, &grid)?;
    let calc = Calculus::new(g)?;
    let mut table = Table::new("remainders", &["kind", "order", "remainder"]);
    let mut comp = Vec::new();
    for n in 0..=n_comp {
        let e = mid_band_distance(&calc.composition(&a, &b, n)?, &exact, lo, hi);
        table.push(vec![0.0, n as f64, e]);
        comp.push(e);
    }
    let (ma_p, basis_p) = operator_matrix(&a, par_band)?;
    let id = SpatialSymbol::invariant(&grid, MatrixField::identity(&basis_p));
    let mut par = Vec::new();
    for n in 0..=n_par {
        let pm = calc.parametrix(&a, 2.0, n)?;
        let (mp, _) = operator_matrix(&pm.symbol, par_band)?;
        let prod = symbol_of_matrix(&(&ma_p * mp), &basis_p, &grid)?;
        let e = mid_band_distance(&prod, &id, lo, hi);
        table.push(vec![1.0, n as f64, e]);
        par.push(e);
    }
    let mut out = Outcome::new(p);
    for n in 1..comp.len() {
        let ratio = comp[n - 1] / comp[n].max(1e-300);
        out.check(
            &format!("expansion_ratio_{}_{}", n - 1, n),
            ratio,
            &format!(">= {factor}"),
            ratio >= factor,
        );
    }
    for n in 1..par.len() {
        out.check(
            &format!("parametrix_step_{}_{}", n - 1, n),
            par[n] - par[n - 1],
            "< 0 (monotone decrease)",
            par[n] < par[n - 1],
        );
    }
    out.table(table);
    Ok(out)
}

fn garding(p: &Params) -> Result<Outcome> {
    let band = p.f64("band")?;
    let cut = p.f64("symbol_cutoff")?;
    let budget = p.f64("budget")?;
    let min_c1 = p.f64("min_c1")?;
    let g = Group::Torus(1);
    let sub = SubLaplacian::laplacian(g);
    let dual = Dual::new(g, cut)?;
    let grid = Arc::new(haar_grid(g, 2.0 * cut + 2.0)?);
    let variable = SpatialSymbol::from_fn(&grid, &dual, |x, xi| {
        let k = xi.torus_k().expect("torus irrep")[0] as f64;
        linalg::diag_real(&[(2.0 + x.coords()[0].cos()) * (1.0 + k * k)])
    });
    let plain = SpatialSymbol::invariant(&grid, laplacian_symbol(&dual).add(&MatrixField::identity(&dual))?);
    let rv = garding_feasibility(&variable, &sub, 2.0, band, budget)?;
    let rp = garding_feasibility(&plain, &sub, 2.0, band, budget)?;
    let mut table = Table::new("pairs", &["case", "c1", "c2", "generalized_min", "ellipticity_constant"]);
    for (i, r) in [&rv, &rp].iter().enumerate() {
        let (c1, c2) = r.pair.unwrap_or((f64::NAN, f64::NAN));
        table.push(vec![i as f64, c1, c2, r.generalized_min, r.ellipticity_constant]);
    }
    let mut out = Outcome::new(p);
    let c1v = rv.pair.map_or(f64::NAN, |q| q.0);
    out.check("variable_c1", c1v, &format!(">= {min_c1}"), c1v >= min_c1);
    let (c1p, c2p) = rp.pair.unwrap_or((f64::NAN, f64::NAN));
    out.check("plain_c1", c1p, "1 +- 1e-9", within(c1p, 1.0, 1e-9))
        .check("plain_c2", c2p, "0", c2p == 0.0)
        .table(table);
    Ok(out)
}

fn contour(p: &Params) -> Result<Outcome> {
    let cut = p.f64("cutoff")?;
    let per_piece = p.usize("per_piece")?;
    let trials = p.usize("trials")?;
    let (lmin, lmax) = (p.f64("log_min")?, p.f64("log_max")?);
    let power = p.f64("power")?;
    let tol = p.f64("tolerance")?;
    if !(lmax > lmin) {
        return Err(Error::Invalid("log_max must exceed log_min".into()));
    }
    let dual = Dual::new(Group::Su2, cut)?;
    let grid = Arc::new(haar_grid(Group::Su2, 1.0)?);
    let mut r = rng(p);
    let mut table = Table::new("trials", &["trial", "min_eigenvalue", "max_eigenvalue", "error"]);
    let mut worst = 0.0f64;
    let mut nodes = 0;
    for trial in 0..trials {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let f = MatrixField::from_fn(&dual, |xi| {
            let v: Vec<f64> = (0..xi.dim()).map(|_| 10f64.powf(r.gen_range(lmin..lmax))).collect();
            for &e in &v {
                lo = lo.min(e);
                hi = hi.max(e);
            }
            linalg::diag_real(&v)
        });
        let sym = SpatialSymbol::invariant(&grid, f.clone());
        let ct = Contour::default_with_nodes(&sym, per_piece)?;
        nodes = ct.len();
        let got = contour_calculus(&sym, |z| z.powf(power), &ct)?;
        let want = spectral_function(&f, |z| z.powf(power))?;
        let err = got.invariant_field().expect("invariant input").max_abs_diff(&want);
        worst = worst.max(err);
        table.push(vec![trial as f64, lo, hi, err]);
    }
    let mut out = Outcome::new(p);
    out.check("max_error", worst, &format!("< {tol:e}"), worst < tol)
        .check("contour_nodes", nodes as f64, "reported", true)
        .table(table);
    Ok(out)
}

fn fio(p: &Params) -> Result<Outcome> {
    let cut = p.f64("cutoff")?;
    let scale = p.f64("phase_scale")?;
    let wcut = p.f64("wave_cutoff")?;
    let nt = p.usize("t_count")?;
    let tcut = p.f64("torus_cutoff")?;
    let ntol = p.f64("norm_tolerance")?;
    let dtol = p.f64("drift_tolerance")?;
    let sub = SubLaplacian::su2_pair(1, 2)?;
    // wavetype operator with invariant amplitude
    let dual = Dual::new(Group::Su2, cut)?;
    let grid = Arc::new(haar_grid(Group::Su2, cut)?);
    let sym = SpatialSymbol::invariant(&grid, sub.m_weight_field(-0.5, &dual));
    let big_phi = sub.symbol(&dual).scale(re(scale));
    let w = wavetype_symbol(&sym, &big_phi)?;
    let norm = l2_opnorm(&operator_matrix(&w, cut)?.0);
    let sup = sym.sup_op_norm();
    // wave energy
    let wdual = Dual::new(Group::Su2, wcut)?;
    let wgrid = haar_grid(Group::Su2, wcut)?;
    let mut r = rng(p);
    let mut sample = || -> Vec<C64> { (0..wgrid.len()).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect() };
    let f0 = fourier_transform(&wgrid, &sample(), &wdual)?;
    let f1 = fourier_transform(&wgrid, &sample(), &wdual)?;
    if nt < 2 {
        return Err(Error::Invalid("t_count must be at least 2".into()));
    }
    let ts: Vec<f64> = (0..nt).map(|i| i as f64 / (nt - 1) as f64).collect();
    let rows = energy_table(&sub, WaveOperator::Shifted, &f0, &f1, &ts)?;
    let mut energy = Table::new("energy", &["t", "energy", "drift"]);
    let mut drift = 0.0f64;
    for &(t, e, d) in &rows {
        energy.push(vec![t, e, d]);
        drift = drift.max(d);
    }
    // torus phase gaps
    let tgrid = haar_grid(Group::Torus(1), tcut + 2.0)?;
    let linear = phase_gap_check_torus(1, |x, k| k[0] as f64 * x[0], tcut, &tgrid)?;
    let zero = phase_gap_check_torus(1, |_, _| 0.0, tcut, &tgrid)?;
    let mut gaps = Table::new("phase_gap", &["case", "min_ratio", "max_ratio"]);
    for (i, rep) in [&linear, &zero].iter().enumerate() {
        gaps.push(vec![
            i as f64,
            rep.get_extra("min_ratio").unwrap_or(f64::NAN),
            rep.get_extra("max_ratio").unwrap_or(f64::NAN),
        ]);
    }
    let mut out = Outcome::new(p);
    out.check(
        "wavetype_norm_minus_sup",
        (norm - sup).abs(),
        &format!("< {ntol:e}"),
        (norm - sup).abs() < ntol,
    )
    .check("energy_drift", drift, &format!("< {dtol:e}"), drift < dtol)
    .check(
        "phase_gap_linear",
        linear.get_extra("min_ratio").unwrap_or(f64::NAN),
        "PASS",
        linear.verdict == Verdict::Pass,
    )
    .check(
        "phase_gap_zero",
        zero.get_extra("min_ratio").unwrap_or(f64::NAN),
        "FAIL",
        zero.verdict == Verdict::Fail,
    )
    .table(energy)
    .table(gaps);
    Ok(out)
}

fn kernel(p: &Params) -> Result<Outcome> {
    let sub = su2_sub(p, "sub")?;
    let m = p.f64("order")?;
    let window = p.f64("window")?;
    let radii = logspace(p.f64("r_min")?, p.f64("r_max")?, p.usize("r_count")?)?;
    let tol = p.f64("tolerance")?;
    let stab = p.f64("stability")?;
    let cfg = KernelProfileConfig {
        window,
        radii,
        m,
        rho: 1.0,
    };
    let rep = kernel_profile(&sub, |v: f64| (1.0 + v).powf(m / 2.0), &cfg)?;
    let expected = -(sub.q() + m);
    let change = rep.get_extra("exponent_change").unwrap_or(f64::NAN);
    let mut table = Table::new("profile", &["radius", "sup_kernel"]);
    for &(r, v) in &rep.samples {
        table.push(vec![r, v]);
    }
    let mut out = Outcome::new(p);
    out.check(
        "gauge_exponent",
        rep.exponent,
        &format!("{expected} +- {tol}"),
        within(rep.exponent, expected, tol),
    )
    .check("exponent_change_under_doubling", change, &format!("< {stab}"), change < stab)
    .fit(rep)
    .table(table);
    Ok(out)
}

fn determinism(p: &Params) -> Result<Outcome> {
    let target = p.text("target")?;
    let runs = p.usize("runs")?;
    if target == "determinism" {
        return Err(Error::Invalid("determinism cannot target itself".into()));
    }
    if runs < 2 {
        return Err(Error::Invalid("runs must be at least 2".into()));
    }
    let mut outputs = Vec::new();
    for _ in 0..runs {
        let o = run(&Params::defaults(&target, p.seed)?)?;
        outputs.push(rendered_bytes(&o)?);
    }
    let first = &outputs[0];
    let mut table = Table::new("files", &["file", "bytes", "identical"]);
    let mut differing = 0usize;
    for (i, (name, body)) in first.iter().enumerate() {
        let same = outputs[1..]
            .iter()
            .all(|o| o.get(i).is_some_and(|(n, b)| n == name && b == body));
        if !same {
            differing += 1;
        }
        table.push(vec![i as f64, body.len() as f64, if same { 1.0 } else { 0.0 }]);
    }
    let shape_ok = outputs.iter().all(|o| o.len() == first.len());
    let mut out = Outcome::new(p);
    out.check(
        "differing_files",
        differing as f64,
        "0",
        differing == 0 && shape_ok,
    )
    .table(table);
    Ok(out)
}

fn weight_equivalence(p: &Params) -> Result<Outcome> {
    let g = p.group("group")?;
    let sub = p.sub_laplacian(g, "sub")?;
    let kappa = p.usize("kappa")?;
    let cut = p.f64("cutoff")?;
    let rep = equiv_weight_check(&sub, kappa, cut)?;
    let mut table = Table::new("ratios", &["bracket", "ratio"]);
    for &(x, y) in &rep.samples {
        table.push(vec![x, y]);
    }
    let mut out = Outcome::new(p);
    out.check("equivalence", rep.exponent, "PASS", rep.verdict == Verdict::Pass)
        .fit(rep)
        .table(table);
    Ok(out)
}

fn eigen_gap(p: &Params) -> Result<Outcome> {
    let tau = p.f64("tau")?;
    let cut = p.f64("cutoff")?;
    let sub = SubLaplacian::laplacian(Group::Torus(1));
    let rep = eigen_gap_check(&sub, tau, cut)?;
    let eps = rep.get_extra("epsilon0").unwrap_or(f64::NAN);
    // complete pairs stop at (K-1, K) for the integer cutoff K
    let k = cut.floor();
    let closed = 1.0 - ((k - 1.0) / k).powf(2.0 * tau);
    let mut table = Table::new("gap", &["tau", "epsilon0", "closed_form"]);
    table.push(vec![tau, eps, closed]);
    let mut out = Outcome::new(p);
    out.check("epsilon0_minus_closed_form", (eps - closed).abs(), "< 1e-12", (eps - closed).abs() < 1e-12)
        .fit(rep)
        .table(table);
    Ok(out)
}

fn psi_trace_exp(p: &Params) -> Result<Outcome> {
    let sub = su2_sub(p, "sub")?;
    let q = p.f64("q")?;
    let ts = logspace(p.f64("t_min")?, p.f64("t_max")?, p.usize("t_count")?)?;
    let ladder = SpectrumLadder::new(&sub)?;
    let rep = psi_plateau(&ladder, default_psi, (1.0, 4.0), q, &ts)?;
    let mut table = Table::new("plateau", &["t", "ratio"]);
    for &(t, v) in &rep.samples {
        table.push(vec![t, v]);
    }
    let drift = rep.get_extra("max_drift").unwrap_or(f64::NAN);
    let mut out = Outcome::new(p);
    out.check("max_drift", drift, "<= 0.15", rep.verdict == Verdict::Pass)
        .fit(rep)
        .table(table);
    Ok(out)
}

fn hulanicki(p: &Params) -> Result<Outcome> {
    let nt = p.usize("t_count")?;
    let ladder = p.ladder("ladder")?;
    let ts: Vec<f64> = (0..nt).map(|i| 0.5f64.powi(i as i32)).collect();
    let sub = SubLaplacian::laplacian(Group::Torus(1));
    let rep = hulanicki_check(|l| (1.0 + l).powf(-0.5), -1.0, &sub, &ts, &ladder)?;
    let mut table = Table::new("exponents", &["entry", "exponent"]);
    for (i, e) in rep.entries.iter().enumerate() {
        table.push(vec![i as f64, e.exponent]);
    }
    let mut out = Outcome::new(p);
    out.check(
        "max_exponent",
        rep.max_exponent,
        &format!("<= {}", rep.threshold),
        rep.verdict == Verdict::Pass,
    )
    .table(table);
    Ok(out)
}
