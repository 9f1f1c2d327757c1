//! One runner per task; each returns a single table.

use qresponse::analytic::{
    broadened_response, fluid_current_response, fluid_ward_residual, kramers_kronig, oscillator_frequency,
    oscillator_poles, oscillator_time, rc_frequency, rc_pole, rc_time, relative_l2, FluidParams, FrequencyGrid,
};
use qresponse::correlators::{generalized_covariance, linear_response, relaxation_function, spectral_two_point};
use qresponse::dynamics::{mean_work, propagate, propagate_checked, volterra_predict, DriveProtocol, VolterraKernels};
use qresponse::model::SystemSpec;
use qresponse::thermal::{chi_s_n_at, chi_t_mu_at, suzuki_limit_at, ThermalState};
use qresponse::tolerance::ToleranceProfile;
use qresponse::workstats::{crooks_check, free_energy_change, jarzynski_check, work_distribution};
use qresponse::{FTag, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{check_source, KkModel, TaskConfig};
use crate::error::{numeric, CliError};
use crate::output::{format_float, ResultTable};

/// Everything a task may need, prepared once per run.
pub struct Context<'a> {
    pub spec: Option<&'a SystemSpec>,
    pub state: Option<&'a ThermalState>,
    pub protocol: Option<&'a DriveProtocol>,
    pub steps: usize,
    pub tolerance: ToleranceProfile,
}

impl Context<'_> {
    fn system(&self) -> (&SystemSpec, &ThermalState) {
        (self.spec.expect("system prepared"), self.state.expect("state prepared"))
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "true"
    } else {
        "false"
    }
}

pub fn run(task: &TaskConfig, index: usize, ctx: &Context) -> Result<ResultTable, CliError> {
    let name = task.name();
    let num = numeric(name);
    let at = |field: &str| format!("tasks[{index}].{field}");
    match task {
        TaskConfig::StaticSusc { .. } => {
            let (spec, st) = ctx.system();
            let tm = chi_t_mu_at(st, spec, 2).map_err(&num)?;
            let sn = chi_s_n_at(st, spec, 2).map_err(&num)?;
            let l = suzuki_limit_at(st, spec).map_err(&num)?;
            let (tm, sn) = (tm.as_matrix().expect("order 2"), sn.as_matrix().expect("order 2"));
            let labels = spec.labels();
            let s = spec.num_sources();
            let mut t = Table::default();
            let mut suzuki_gap: f64 = 0.0;
            for m in 0..s {
                for n in 0..s {
                    t.text("source_m", labels[m]);
                    t.text("source_n", labels[n]);
                    t.float("chi_t_mu", tm[m][n]);
                    t.float("chi_s_n", sn[m][n]);
                    t.float("suzuki_closed_form", l.closed_form[m][n]);
                    t.float("suzuki_time_average", l.cesaro[m][n]);
                    suzuki_gap = suzuki_gap.max((tm[m][n] - sn[m][n] - l.closed_form[m][n]).abs());
                }
            }
            Ok(t.finish().meta("max_suzuki_identity_gap", format_float(suzuki_gap)))
        }
        TaskConfig::Spectrum { m, n, f, .. } => {
            let (spec, st) = ctx.system();
            check_source(spec, *m, at("m"))?;
            check_source(spec, *n, at("n"))?;
            let tag: FTag = f.parse().map_err(&num)?;
            let rho = spectral_two_point(st, spec, *m, *n).map_err(&num)?;
            let cov = generalized_covariance(st, spec, *m, *n, &tag).map_err(&num)?;
            let mut t = Table::default();
            for line in &rho.lines {
                let c = cov.weight_at(line.omega).unwrap_or_default();
                t.float("omega", line.omega);
                t.float("spectral_re", line.weight.re);
                t.float("spectral_im", line.weight.im);
                t.float("covariance_re", c.re);
                t.float("covariance_im", c.im);
            }
            Ok(t.finish().meta("f", tag))
        }
        TaskConfig::FdrCheck { f, m, n, .. } => {
            let (spec, st) = ctx.system();
            check_source(spec, *m, at("m"))?;
            check_source(spec, *n, at("n"))?;
            let tags: Vec<FTag> = if f.is_empty() {
                FTag::whitelist()
            } else {
                f.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(&num)?
            };
            let rho = spectral_two_point(st, spec, *m, *n).map_err(&num)?;
            let floor = 1e-12 * rho.max_weight();
            let mut t = Table::default();
            let mut worst: f64 = 0.0;
            for tag in &tags {
                let cov = generalized_covariance(st, spec, *m, *n, tag).map_err(&num)?;
                for line in rho.lines.iter().filter(|l| l.weight.norm() > floor && l.omega != 0.0) {
                    let c = cov.weight_at(line.omega).unwrap_or_default();
                    let coef = qresponse::correlators::fdr_coefficient(tag, st.beta, line.omega);
                    let ratio = c / line.weight;
                    let dev = (ratio - coef).norm() / coef.abs().max(f64::MIN_POSITIVE);
                    worst = worst.max(dev);
                    t.text("f", &tag.to_string());
                    t.float("omega", line.omega);
                    t.float("ratio_re", ratio.re);
                    t.float("ratio_im", ratio.im);
                    t.float("coefficient", coef);
                    t.float("deviation", dev);
                }
            }
            let mut table = t.finish();
            let rows = table.rows();
            table = table.float("max_deviation", vec![worst; rows]);
            Ok(table
                .meta("max_deviation", format_float(worst))
                .meta("tolerance", format_float(ctx.tolerance.identity))
                .meta("pass", pass(worst <= ctx.tolerance.identity)))
        }
        TaskConfig::Respond { m, n, t_max, points, .. } => {
            let (spec, st) = ctx.system();
            check_source(spec, *m, at("m"))?;
            check_source(spec, *n, at("n"))?;
            let k = linear_response(st, spec, *m, *n).map_err(&num)?;
            let grid: Vec<f64> = (0..*points).map(|i| t_max * i as f64 / (*points - 1) as f64).collect();
            let relax = relaxation_function(st, spec, *m, *n, &grid).map_err(&num)?;
            let delayed: Vec<f64> = grid.iter().map(|&s| k.delayed_at(s)).collect();
            Ok(ResultTable::new()
                .float("t", grid)
                .float("delayed_response", delayed)
                .float("relaxation", relax.values)
                .meta("instantaneous", format_float(k.instantaneous))
                .meta("relaxation_before_switch", format_float(relax.before))
                .meta("relaxation_long_time", format_float(relax.long_time)))
        }
        TaskConfig::VolterraCheck { orders, amplitudes, .. } => {
            let (spec, _) = ctx.system();
            let base = ctx.protocol.expect("protocol validated");
            let st = ThermalState::at_sources(spec, &base.j_initial(), ctx.system().1.beta, ctx.system().1.mu)
                .map_err(&num)?;
            let top = *orders.iter().max().expect("orders validated");
            let kernels = VolterraKernels::build(&st, spec, top).map_err(&num)?;
            let mut errors = vec![Vec::new(); orders.len()];
            for &lambda in amplitudes {
                let p = base.scaled(lambda);
                // The reference has to sit well below the smallest truncation error.
                let exact = propagate_checked(spec, &st, &p, ctx.steps, 1e-2 * ctx.tolerance.numeric).map_err(&num)?;
                for (slot, &order) in orders.iter().enumerate() {
                    let pred = volterra_predict(&kernels, &p, &exact.times, order).map_err(&num)?;
                    let err = exact
                        .phi
                        .iter()
                        .zip(&pred)
                        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                        .fold(0.0f64, f64::max);
                    errors[slot].push(err);
                }
            }
            let mut t = Table::default();
            for (slot, &order) in orders.iter().enumerate() {
                let slope = fit_slope(amplitudes, &errors[slot]);
                for (a, e) in amplitudes.iter().zip(&errors[slot]) {
                    t.text("row", "point");
                    t.int("order", order as i64);
                    t.float("amplitude", *a);
                    t.float("max_error", *e);
                    t.float("exponent", slope);
                }
                t.text("row", "fit");
                t.int("order", order as i64);
                t.float("amplitude", f64::NAN);
                t.float("max_error", f64::NAN);
                t.float("exponent", slope);
            }
            Ok(t.finish().meta("expected_exponent", "order + 1").meta("steps", ctx.steps))
        }
        TaskConfig::WorkStats { crooks, .. } => {
            let (spec, st0) = ctx.system();
            let p = ctx.protocol.expect("protocol validated");
            let st = ThermalState::at_sources(spec, &p.j_initial(), st0.beta, st0.mu).map_err(&num)?;
            let traj = propagate(spec, &st, p, ctx.steps).map_err(&num)?;
            let dist = work_distribution(spec, &st, p, &traj.u_final).map_err(&num)?;
            let jz = jarzynski_check(&dist, &st, spec, p).map_err(&num)?;
            let d_omega = free_energy_change(spec, &st, p).map_err(&num)?;
            let w_traj = mean_work(&traj, p);
            let mut table = ResultTable::new()
                .float("work", dist.outcomes.iter().map(|o| o.0).collect())
                .float("probability", dist.outcomes.iter().map(|o| o.1).collect())
                .meta("total_probability", format_float(dist.total_probability()))
                .meta("mean_work_distribution", format_float(dist.mean()))
                .meta("mean_work_trajectory", format_float(w_traj))
                .meta("delta_omega", format_float(d_omega))
                .meta("jarzynski_residual", format_float(jz))
                .meta("jarzynski_pass", pass(jz <= ctx.tolerance.accumulated));
            if *crooks {
                let rep = crooks_check(spec, &st, p, &traj.u_final, ctx.steps).map_err(&num)?;
                table = table
                    .meta("crooks_max_deviation", format_float(rep.max_deviation))
                    .meta("crooks_pass", pass(rep.max_deviation <= 1e-8));
            }
            Ok(table)
        }
        TaskConfig::Kk { model, half_width, points, .. } => {
            let grid = match model {
                KkModel::Lorentzian { omega0, gamma } => {
                    if !(*gamma > 0.0) {
                        return Err(CliError::Validation { path: at("model.gamma"), message: "must be positive".into() });
                    }
                    let (w0, g) = (*omega0, *gamma);
                    FrequencyGrid::sample(*half_width, *points, |w| C64::new(1.0, 0.0) / C64::new(w0 - w, -g))
                }
                KkModel::Rc { r, c } => FrequencyGrid::sample(*half_width, *points, |w| rc_frequency(*r, *c, w)),
                KkModel::Oscillator { omega0, zeta } => {
                    oscillator_poles(*omega0, *zeta).map_err(&num)?;
                    FrequencyGrid::sample(*half_width, *points, |w| {
                        oscillator_frequency(*omega0, *zeta, w).expect("parameters checked")
                    })
                }
                KkModel::Response { m, n, eta } => {
                    let (spec, st) = ctx.system();
                    check_source(spec, *m, at("model.m"))?;
                    check_source(spec, *n, at("model.n"))?;
                    let k = linear_response(st, spec, *m, *n).map_err(&num)?;
                    let omegas = FrequencyGrid::sample(*half_width, *points, |_| C64::new(0.0, 0.0))
                        .map_err(&num)?
                        .omegas;
                    broadened_response(&k.spectral, omegas, *eta)
                }
            }
            .map_err(&num)?;
            let partner = kramers_kronig(&grid).map_err(&num)?;
            let part = |g: &FrequencyGrid<f64>, re: bool| g.values.iter().map(|v| if re { v.re } else { v.im }).collect::<Vec<_>>();
            let (re, im) = (part(&grid, true), part(&grid, false));
            let (re_k, im_k) = (part(&partner, true), part(&partner, false));
            let (err_re, err_im) = (relative_l2(&re_k, &re), relative_l2(&im_k, &im));
            Ok(ResultTable::new()
                .float("omega", grid.omegas.clone())
                .float("re", re)
                .float("im", im)
                .float("re_from_im", re_k)
                .float("im_from_re", im_k)
                .meta("edge_ratio", format_float(grid.edge_ratio()))
                .meta("rel_l2_re", format_float(err_re))
                .meta("rel_l2_im", format_float(err_im))
                .meta("pass", pass(err_re.max(err_im) <= 1e-3)))
        }
        TaskConfig::ReferenceModels { r, c, omega0, zeta, t_max, omega_max, points, .. } => {
            let n = *points;
            let lin = |lo: f64, hi: f64| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
            let ts: Vec<f64> = lin(-0.25 * t_max, *t_max).collect();
            let ws: Vec<f64> = lin(-omega_max, *omega_max).collect();
            let osc_t = ts.iter().map(|&t| oscillator_time(*omega0, *zeta, t)).collect::<Result<Vec<_>, _>>().map_err(&num)?;
            let osc_w =
                ws.iter().map(|&w| oscillator_frequency(*omega0, *zeta, w)).collect::<Result<Vec<_>, _>>().map_err(&num)?;
            let rc_w: Vec<C64> = ws.iter().map(|&w| rc_frequency(*r, *c, w)).collect();
            let poles = oscillator_poles(*omega0, *zeta).map_err(&num)?;
            Ok(ResultTable::new()
                .float("t", ts.clone())
                .float("rc_time", ts.iter().map(|&t| rc_time(*r, *c, t)).collect())
                .float("oscillator_time", osc_t)
                .float("omega", ws)
                .float("rc_re", rc_w.iter().map(|z| z.re).collect())
                .float("rc_im", rc_w.iter().map(|z| z.im).collect())
                .float("oscillator_re", osc_w.iter().map(|z| z.re).collect())
                .float("oscillator_im", osc_w.iter().map(|z| z.im).collect())
                .meta("rc_static", format_float(rc_frequency(*r, *c, 0.0).re))
                .meta("rc_pole", complex_text(rc_pole(*r, *c)))
                .meta("oscillator_poles", format!("{}; {}", complex_text(poles[0]), complex_text(poles[1]))))
        }
        TaskConfig::FluidCurrent { sigma, d, tau, points, seed, .. } => {
            let params = FluidParams::new(*sigma, *d, *tau).map_err(&num)?;
            let mut samples: Vec<(C64, [f64; 3])> = vec![(C64::new(0.0, 0.0), [1.0, 0.0, 0.0])];
            match seed {
                Some(s) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*s);
                    for _ in 1..*points {
                        let p0 = C64::new(rng.gen_range(-4.0..4.0), rng.gen_range(0.0..1.0));
                        samples.push((p0, [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]));
                    }
                }
                None => {
                    for k in 1..*points {
                        let x = k as f64 / *points as f64;
                        let a = 2.0 * std::f64::consts::PI * x;
                        let p0 = C64::new(-4.0 + 8.0 * x, 0.5 * (3.0 * a).sin().abs());
                        samples.push((p0, [(1.0 + x) * a.cos(), (1.0 + x) * a.sin(), 1.0 - 2.0 * x]));
                    }
                }
            }
            let mut t = Table::default();
            let mut worst: f64 = 0.0;
            for (p0, p) in &samples {
                let g = fluid_current_response(&params, *p0, *p).map_err(&num)?;
                let res = fluid_ward_residual(&g, *p0, *p);
                worst = worst.max(res);
                t.float("p0_re", p0.re);
                t.float("p0_im", p0.im);
                t.float("px", p[0]);
                t.float("py", p[1]);
                t.float("pz", p[2]);
                t.float("g00_re", g[0][0].re);
                t.float("g00_im", g[0][0].im);
                t.float("gxx_re", g[1][1].re);
                t.float("gxx_im", g[1][1].im);
                t.float("ward_residual", res);
            }
            Ok(t.finish()
                .meta("static_susceptibility", format_float(params.susceptibility().map_err(&num)?))
                .meta("max_ward_residual", format_float(worst))
                .meta("pass", pass(worst <= ctx.tolerance.identity)))
        }
    }
}

fn complex_text(z: C64) -> String {
    format!("{} {} i", format_float(z.re), format_float(z.im))
}

/// Least-squares slope of `ln e` against `ln a`.
pub fn fit_slope(a: &[f64], e: &[f64]) -> f64 {
    let xs: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Row-wise builder that keeps column order by first appearance.
#[derive(Default)]
struct Table {
    floats: Vec<(&'static str, Vec<f64>)>,
    ints: Vec<(&'static str, Vec<i64>)>,
    texts: Vec<(&'static str, Vec<String>)>,
    order: Vec<(&'static str, u8)>,
}

impl Table {
    fn slot<T>(list: &mut Vec<(&'static str, Vec<T>)>, order: &mut Vec<(&'static str, u8)>, name: &'static str, kind: u8) -> usize {
        match list.iter().position(|(n, _)| *n == name) {
            Some(i) => i,
            None => {
                list.push((name, Vec::new()));
                order.push((name, kind));
                list.len() - 1
            }
        }
    }

    fn float(&mut self, name: &'static str, v: f64) {
        let i = Self::slot(&mut self.floats, &mut self.order, name, 0);
        self.floats[i].1.push(v);
    }

    fn int(&mut self, name: &'static str, v: i64) {
        let i = Self::slot(&mut self.ints, &mut self.order, name, 1);
        self.ints[i].1.push(v);
    }

    fn text(&mut self, name: &'static str, v: &str) {
        let i = Self::slot(&mut self.texts, &mut self.order, name, 2);
        self.texts[i].1.push(v.to_string());
    }

    fn finish(mut self) -> ResultTable {
        let mut out = ResultTable::new();
        for (name, kind) in self.order.clone() {
            out = match kind {
                0 => out.float(name, take(&mut self.floats, name)),
                1 => out.int(name, take(&mut self.ints, name)),
                _ => out.text(name, take(&mut self.texts, name)),
            };
        }
        out
    }
}

fn take<T>(list: &mut [(&'static str, Vec<T>)], name: &str) -> Vec<T> {
    std::mem::take(&mut list.iter_mut().find(|(n, _)| *n == name).expect("column registered").1)
}
