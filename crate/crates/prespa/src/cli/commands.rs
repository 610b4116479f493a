use super::config::{CavityInput, ChiChannelKind, GrapeTask, RunConfig};
use crate::budget::{budget_totals, Budget};
use crate::circuitmodel::{mixing_rates, transmon_rates, CombConfig};
use crate::codes::{cavity_moments, encode, t4c_words, CodeWords};
use crate::decoder::DecodingBasis;
use crate::dissipator::{averaged_density, exact_averaged_density, jump_count_probs, monte_carlo_unravel, JumpProcess};
use crate::error::{Error, Result};
use crate::experiments::{
    chi_matrix, density_fidelity, fit_damped_sinusoid, lifetime_experiment, prespa_ramsey, reconstruct_density, spectroscopy_2d,
    transmon_spectroscopy, wigner, CavityChannel, CombChannel, IdealPrespaChannel, IdentityChannel, LifetimeConfig,
};
use crate::grape::{self, decode_target, optimize, with_transmon_ground, ControlProblem, ControlPulse, CostWeights, PulseMetadata, Target};
use crate::opensystem::{heating_rate_oracle, heating_scan, CombModel, EvolveOptions, LindbladGenerator, TimedOperator};
use crate::qalg::{c, r, CMat, CVec, HilbertSpace, StateVector};
use crate::table::{format_f64, CsvTable};
use serde_json::{json, Value};

/// Result of one subcommand: the data file, the figure it feeds, a JSON
/// summary and a human-readable report.
pub struct RunOutput {
    pub csv: String,
    pub figure: &'static str,
    pub summary: Value,
    pub report: String,
    /// Set when the run completed but a check inside it did not pass.
    pub failure: Option<String>,
}

impl RunOutput {
    fn new(table: CsvTable, figure: &'static str, summary: Value, report: String) -> Self {
        Self { csv: table.to_csv(), figure, summary, report, failure: None }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config("grids need at least one point and finite bounds".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

fn cavity_state(input: CavityInput, cw: &CodeWords, dim: usize) -> Result<StateVector> {
    match input {
        CavityInput::Logical(cardinal) => encode(cw, &cardinal.amplitudes(), dim),
        CavityInput::Fock(n) if n < dim => HilbertSpace::single(dim)?.basis(&[n]),
        CavityInput::Fock(n) => Err(Error::Config(format!("Fock input {n} outside the cavity truncation {dim}"))),
        CavityInput::Superposition([a, b]) if a != b && a.max(b) < dim => {
            let mut v = CVec::zeros(dim);
            v[a] = r(std::f64::consts::FRAC_1_SQRT_2);
            v[b] = r(std::f64::consts::FRAC_1_SQRT_2);
            StateVector::new(HilbertSpace::single(dim)?, v)
        }
        CavityInput::Superposition(levels) => Err(Error::Config(format!("superposition {levels:?} needs two distinct levels below {dim}"))),
    }
}

pub fn lifetime(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.lifetime;
    if !(s.tstep > 0.0) || !(s.tmax >= 0.0) {
        return Err(Error::Config("lifetime needs tstep > 0 and tmax ≥ 0".into()));
    }
    let n = (s.tmax / s.tstep + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * s.tstep).collect();
    let lc = LifetimeConfig {
        mode: s.mode,
        code: cfg.code,
        times,
        fidelity: s.fidelity,
        loss_rate: s.loss_rate,
        decode: s.decode,
        jmax: s.jmax,
        comb: cfg.effective_comb(),
    };
    let res = lifetime_experiment(&cfg.device, &lc)?;
    let tau = |f: &Option<crate::decoder::DecayFit>| f.as_ref().map(|f| f.tau);
    let summary = json!({
        "tau_process_us": opt(tau(&res.process)),
        "tau_pole_us": opt(tau(&res.pole)),
        "tau_equator_us": opt(tau(&res.equator)),
    });
    let show = |x: Option<f64>| x.map_or("not fitted".to_string(), |t| format!("{t:.1} μs"));
    let report = format!(
        "process τ = {}\npole τ = {}\nequator τ = {}\n",
        show(tau(&res.process)),
        show(tau(&res.pole)),
        show(tau(&res.equator))
    );
    Ok(RunOutput::new(res.curves.to_table(), "logical memory lifetime", summary, report))
}

pub fn trajectory(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.trajectory;
    let dim = cfg.comb.cavity_dim;
    let kappa = s.kappa.unwrap_or(1.0 / cfg.device.t1a);
    if !(kappa > 0.0) || !(s.kappa_t >= 0.0) {
        return Err(Error::Config("trajectory needs κ > 0 and κt ≥ 0".into()));
    }
    let t = s.kappa_t / kappa;
    let psi0 = cavity_state(s.input, &cfg.code.words(), dim)?;
    let jp = JumpProcess::prespa(kappa, dim)?;
    let mc = monte_carlo_unravel(&psi0, t, s.ntraj, cfg.seed, &jp)?;
    let analytic = jump_count_probs(&psi0, t, s.jmax, &jp)?;
    let hist = mc.histogram(s.jmax);
    let ntraj = s.ntraj as f64;
    let mut table = CsvTable::new(["jumps", "mc_count", "mc_fraction", "analytic_probability", "z_score"]);
    let mut worst: f64 = 0.0;
    for (j, (&count, &p)) in hist.iter().zip(&analytic.probs).enumerate() {
        let sigma = (ntraj * p * (1.0 - p)).sqrt();
        let z = if sigma > 0.0 { (count as f64 - ntraj * p) / sigma } else if count == 0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z.abs());
        table.push(vec![j as f64, count as f64, count as f64 / ntraj, p, z]);
    }
    let exact = exact_averaged_density(&psi0, t, &jp)?;
    let mc_distance = mc.density().trace_distance(&exact);
    let summed = averaged_density(&psi0, t, s.jmax, &jp)?;
    let sum_distance = summed.rho.trace_distance(&exact);
    let summary = json!({
        "time_us": t,
        "mean_jumps": mc.mean_jumps(),
        "max_abs_z": worst,
        "mc_trace_distance": mc_distance,
        "jump_sum_trace_distance": sum_distance,
        "jump_sum_deficit": analytic.deficit,
    });
    let report = format!("{} trajectories, largest |z| = {worst:.2}, Monte Carlo trace distance {mc_distance:.3e}\n", s.ntraj);
    Ok(RunOutput::new(table, "jump-count statistics", summary, report))
}

pub fn rates(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.rates;
    if s.calibration_path >= 4 {
        return Err(Error::Config("calibration_path must be 0..=3".into()));
    }
    let mut comb = CombConfig::paper(&cfg.device);
    comb.calibrate_prefactor(s.calibration_path, s.omega_target)?;
    comb.calibrate_lambda_scale(s.calibration_path, s.lambda_target)?;
    let om = mixing_rates(&comb)?;
    let lam = transmon_rates(&comb)?;
    let mut table = CsvTable::new(["path", "omega_re_khz", "omega_im_khz", "omega_abs_khz", "lambda_abs_khz", "lambda_phase_rad"]);
    let mut report = String::new();
    for k in 0..4 {
        table.push(vec![(k + 1) as f64, om[k].re, om[k].im, om[k].norm(), lam[k].norm(), lam[k].arg()]);
        report += &format!("path {}: Ω = {:+.1} kHz, |λ| = {:.1} kHz, arg λ = {:+.3} rad\n", k + 1, om[k].re, lam[k].norm(), lam[k].arg());
    }
    let summary = json!({
        "omega_khz": om.iter().map(|z| z.re).collect::<Vec<_>>(),
        "lambda_abs_khz": lam.iter().map(|z| z.norm()).collect::<Vec<_>>(),
        "lambda_phase_rad": lam.iter().map(|z| z.arg()).collect::<Vec<_>>(),
    });
    Ok(RunOutput::new(table, "multi-tone drive rates", summary, report))
}

fn held_cavity_state(cfg: &RunConfig, psi: &StateVector, hold: f64) -> Result<CMat> {
    let rho = &psi.amps * psi.amps.adjoint();
    if hold == 0.0 {
        return Ok(rho);
    }
    let model = CombModel::build(&cfg.device, &cfg.effective_comb())?;
    let out = model.evolve(&model.embed_operator(&rho), &[hold], &EvolveOptions::default())?;
    model.cavity_state(&out[0])
}

pub fn spectroscopy(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.spectroscopy;
    if !(s.hold >= 0.0) {
        return Err(Error::Config("spectroscopy hold must be non-negative".into()));
    }
    let psi = cavity_state(s.input, &cfg.code.words(), cfg.comb.cavity_dim)?;
    let rho = held_cavity_state(cfg, &psi, s.hold)?;
    let d = grid(s.detuning_min, s.detuning_max, s.points)?;
    let spec = transmon_spectroscopy(&rho, &cfg.device, &d)?;
    let mut table = CsvTable::new(["detuning_mhz", "p_excited"]);
    for (x, p) in spec.dq.iter().zip(&spec.prob) {
        table.push(vec![*x, *p]);
    }
    let pops: Vec<f64> = (0..rho.nrows()).map(|n| rho[(n, n)].re).collect();
    let peak = spec.dq[spec.argmax().0];
    let summary = json!({ "peak_detuning_mhz": peak, "photon_populations": pops });
    Ok(RunOutput::new(table, "photon-number-resolved transmon spectroscopy", summary, format!("strongest line at {peak:.3} MHz\n")))
}

pub fn spectroscopy2d(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.spectroscopy2d;
    let dq = grid(s.dq_min, s.dq_max, s.dq_points)?;
    let dm = grid(s.dm_min, s.dm_max, s.dm_points)?;
    let spec = spectroscopy_2d(&cfg.device, &dq, &dm, s.init_fock, &s.drive)?;
    let mut table = CsvTable::new(["dq_mhz", "dm_mhz", "p_added"]);
    for (i, &a) in dq.iter().enumerate() {
        for (j, &b) in dm.iter().enumerate() {
            table.push(vec![a, b, spec.at(i, j)]);
        }
    }
    let (i, j) = spec.argmax();
    let summary = json!({ "peak_dq_mhz": dq[i], "peak_dm_mhz": dm[j], "peak_probability": spec.at(i, j) });
    Ok(RunOutput::new(table, "two-tone Raman spectroscopy map", summary, format!("peak at Δq = {:.3} MHz, Δm = {:.3} MHz\n", dq[i], dm[j])))
}

pub fn ramsey(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.ramsey;
    let psi = cavity_state(s.input, &cfg.code.words(), s.ramsey.dim)?;
    let times = grid(0.0, s.tmax, s.points)?;
    let res = prespa_ramsey(&psi, c(s.probe_re, s.probe_im), &times, &s.ramsey)?;
    let mut table = CsvTable::new(["time_us", "wigner"]);
    for (t, w) in res.times.iter().zip(&res.w) {
        table.push(vec![*t, *w]);
    }
    let (summary, report) = match fit_damped_sinusoid(&res.times, &res.w) {
        Ok(f) => (
            json!({ "fit": { "offset": f.offset, "amplitude": f.amplitude, "decay_rate_per_us": f.decay_rate, "frequency_khz": f.frequency, "phase": f.phase, "rms": f.rms } }),
            format!("oscillation {:.3} kHz, decay {:.3e} μs⁻¹\n", f.frequency, f.decay_rate),
        ),
        Err(e) => (json!({ "fit": Value::Null, "fit_error": e.to_string() }), format!("no oscillation fitted: {e}\n")),
    };
    Ok(RunOutput::new(table, "parity Ramsey fringes", summary, report))
}

pub fn wigner_map(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.wigner;
    let dim = cfg.comb.cavity_dim;
    let psi = cavity_state(s.input, &cfg.code.words(), dim)?;
    let rho = &psi.amps * psi.amps.adjoint();
    let axis = grid(-s.extent, s.extent, s.points)?;
    let alphas: Vec<_> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| c(x, y))).collect();
    let w = wigner(&rho, &alphas)?;
    let mut table = CsvTable::new(["re_alpha", "im_alpha", "wigner"]);
    for (a, v) in alphas.iter().zip(&w) {
        table.push(vec![a.re, a.im, *v]);
    }
    let w0 = wigner(&rho, &[c(0.0, 0.0)])?[0];
    let mut summary = json!({ "w_origin": w0 });
    let mut report = format!("W(0) = {w0:.6}\n");
    if s.reconstruct {
        let rec = reconstruct_density(&alphas, &w, dim)?;
        let f = density_fidelity(&rec, &rho);
        summary["reconstruction_fidelity"] = json!(f);
        report += &format!("reconstruction fidelity {f:.6}\n");
    }
    Ok(RunOutput::new(table, "cavity Wigner function", summary, report))
}

pub fn chi(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.chi;
    let dim = cfg.comb.cavity_dim;
    let channel: Box<dyn CavityChannel> = match s.channel {
        ChiChannelKind::Identity => Box::new(IdentityChannel { dim }),
        ChiChannelKind::IdealPrespa => Box::new(IdealPrespaChannel { dim }),
        ChiChannelKind::Comb => Box::new(CombChannel { model: CombModel::build(&cfg.device, &cfg.effective_comb())?, duration: s.duration }),
    };
    let pm = chi_matrix(channel.as_ref(), s.duration, s.support, &s.levels, s.shift)?;
    let mut table = CsvTable::new(["in_n", "in_m", "out_n", "out_m", "re", "im"]);
    for n in 0..s.support {
        for k in 0..s.support {
            table.push(vec![n as f64, n as f64, k as f64, k as f64, pm.population[(k, n)], 0.0]);
        }
    }
    for e in &pm.coherence {
        table.push(vec![e.input.0 as f64, e.input.1 as f64, e.output.0 as f64, e.output.1 as f64, e.value.re, e.value.im]);
    }
    let mean = pm.mean_coherence_magnitude();
    let summary = json!({ "mean_coherence_magnitude": mean, "cross_path_max": pm.cross_path_max });
    Ok(RunOutput::new(table, "process matrix of one correction cycle", summary, format!("mean coherence magnitude {mean:.4}\n")))
}

pub fn steady(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.steady;
    if !(s.time > 0.0) {
        return Err(Error::Config("steady needs a positive time".into()));
    }
    let psi = cavity_state(s.input, &cfg.code.words(), cfg.comb.cavity_dim)?;
    let cav = held_cavity_state(cfg, &psi, s.time)?;
    let mut table = CsvTable::new(["photons", "population"]);
    let mut odd = 0.0;
    let mut mean = 0.0;
    for n in 0..cav.nrows() {
        let p = cav[(n, n)].re;
        table.push(vec![n as f64, p]);
        mean += n as f64 * p;
        if n % 2 == 1 {
            odd += p;
        }
    }
    let summary = json!({ "mean_photons": mean, "odd_parity_weight": odd });
    Ok(RunOutput::new(table, "steady-state photon distribution", summary, format!("⟨n⟩ = {mean:.3}, odd weight {odd:.4}\n")))
}

pub fn heating(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.heating;
    let omegas = grid(s.omega_min, s.omega_max, s.points)?;
    let pts = heating_scan(&cfg.device, &omegas, s.gamma_up)?;
    let mut table = CsvTable::new(["omega_khz", "gamma01_per_ms", "rate_equation_per_ms", "p0", "p1"]);
    for h in &pts {
        table.push(vec![h.omega, h.gamma01, heating_rate_oracle(&cfg.device, h.omega, s.gamma_up), h.p0, h.p1]);
    }
    let last = pts.last().map(|h| h.gamma01);
    Ok(RunOutput::new(table, "cavity heating from spurious transmon excitation", json!({ "plateau_per_ms": opt(last) }), String::new()))
}

pub fn grape_run(cfg: &RunConfig) -> Result<RunOutput> {
    let s = &cfg.grape;
    let dims = s.dims;
    let cw = cfg.code.words();
    let target = match s.task {
        GrapeTask::Prepare => {
            let (zero, _) = t4c_words(&cw, dims.cavity)?;
            let mut vac = CVec::zeros(dims.cavity);
            vac[0] = r(1.0);
            Target::state(&with_transmon_ground(&vac, dims)?, &with_transmon_ground(&zero.amps, dims)?)?
        }
        GrapeTask::Decode => decode_target(&DecodingBasis::from_codewords(&cw, dims.cavity)?, dims)?,
    };
    if !(s.dt > 0.0) || !(s.duration > 0.0) {
        return Err(Error::Config("grape needs positive duration and dt".into()));
    }
    let steps = (s.duration * 1e3 / s.dt).round() as usize;
    let prob = ControlProblem::cavity_transmon(&cfg.device, dims, target, s.weights, s.adam)?;
    let res = optimize(&prob, steps, s.dt, cfg.seed)?;
    let meta = PulseMetadata { dt: s.dt, dims, weights: s.weights, seed: cfg.seed, fidelity: res.best.fidelity, iterations: res.history.len() - 1 };
    let summary = json!({
        "fidelity": res.best.fidelity,
        "cost": res.best,
        "converged": res.converged,
        "pulse": meta,
    });
    let report = format!("fidelity {:.5} after {} iterations\n", res.best.fidelity, meta.iterations);
    let mut out = RunOutput::new(res.pulse.to_table(), "optimal-control pulse", summary, report);
    if !res.converged {
        out.failure = Some(format!("fidelity threshold not reached (best {:.5})", res.best.fidelity));
    }
    Ok(out)
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
}

pub fn budget(cfg: &RunConfig) -> Result<RunOutput> {
    let b = match &cfg.budget.input {
        Some(path) => Budget::from_json(&std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)?,
        None => Budget::reference(),
    };
    let p = &cfg.device;
    let mut rows = Vec::new();
    for row in &b.rows {
        let occ = row.occurrence_rate(b.nbar, p)?;
        let (l, t) = row.contributions(b.nbar, p)?;
        rows.push(vec![row.name.clone(), format_f64(occ), format_f64(l), format_f64(t)]);
    }
    let (l, t) = budget_totals(&b, p)?;
    rows.push(vec!["total".into(), String::new(), format_f64(l), format_f64(t)]);
    let csv = csv_text(&["mechanism", "occurrence_per_ms", "longitudinal_per_ms", "transverse_per_ms"], &rows)?;
    let summary = json!({
        "longitudinal_per_ms": l,
        "transverse_per_ms": t,
        "t_longitudinal_us": 1e3 / l,
        "t_transverse_us": 1e3 / t,
    });
    Ok(RunOutput { csv, figure: "logical decoherence budget", summary, report: b.format_table(p)?, failure: None })
}

struct Check {
    name: &'static str,
    value: f64,
    passed: bool,
}

fn check_codewords() -> Result<Check> {
    let (a, b, c2, d) = cavity_moments(&CodeWords::experimental());
    let dev = [a - 3.6, b - 3.4, c2 - 16.6, d - 13.0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Check { name: "experimental code-word moments", value: dev, passed: dev < 1e-9 })
}

fn check_trajectory_vs_master_equation(cfg: &RunConfig) -> Result<Check> {
    let dim = 10;
    let kappa = 1.0;
    let cw = cfg.code.words();
    let psi = encode(&cw, &super::config::Cardinal::PlusX.amplitudes(), dim)?;
    let jp = JumpProcess::prespa(kappa, dim)?;
    let g = LindbladGenerator::new(TimedOperator::from_dense(&CMat::zeros(dim, dim), 0.0), vec![TimedOperator::from_dense(&(&jp.jump_op * r(kappa.sqrt())), 0.0)])?;
    let t = 0.5;
    let me = g.evolve(&(&psi.amps * psi.amps.adjoint()), &[t], &EvolveOptions::default())?.remove(0);
    let traj = averaged_density(&psi, t, 20, &jp)?;
    let diff = &traj.rho.mat - &me;
    let h = (&diff + diff.adjoint()).scale(0.5);
    let dist = 0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>();
    Ok(Check { name: "jump sum against master equation", value: dist, passed: dist < 1e-6 })
}

fn check_budget(cfg: &RunConfig) -> Result<Check> {
    let (l, t) = budget_totals(&Budget::reference(), &cfg.device)?;
    let dev = (l - 2.9).abs().max((t - 3.8).abs());
    Ok(Check { name: "reference budget totals", value: dev, passed: dev < 0.05 })
}

fn check_wigner_parity() -> Result<Check> {
    let mut rho = CMat::zeros(6, 6);
    rho[(1, 1)] = r(1.0);
    let w = wigner(&rho, &[c(0.0, 0.0)])?[0];
    let dev = (w + 2.0 / std::f64::consts::PI).abs();
    Ok(Check { name: "Wigner parity at the origin", value: dev, passed: dev < 1e-12 })
}

fn check_grape_gradient() -> Result<Check> {
    let sx = CMat::from_row_slice(3, 3, &[r(0.0), r(1.0), r(0.0), r(1.0), r(0.0), r(1.4), r(0.0), r(1.4), r(0.0)]);
    let drift = CMat::from_diagonal(&CVec::from_vec(vec![r(0.0), r(-30.0), r(-90.0)]));
    let mut g0 = CVec::zeros(3);
    g0[0] = r(1.0);
    let mut e1 = CVec::zeros(3);
    e1[1] = r(1.0);
    let target = Target::state(&g0, &e1)?;
    let weights = CostWeights { alpha2: 1e-3, alpha3: 1e-4, alpha4: 1e-2 };
    let prob = ControlProblem::new(drift, vec![sx], target, weights, vec![2], Default::default())?;
    let pulse = ControlPulse::white_noise(1, 20, 2.0, 30.0, 1)?;
    let g = grape::gradient(&pulse, &prob)?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..pulse.u.len() {
        let mut a = pulse.clone();
        a.u[i] += h;
        let mut b = pulse.clone();
        b.u[i] -= h;
        let fd = (grape::cost(&a, &prob)?.total - grape::cost(&b, &prob)?.total) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / g.amax());
    }
    Ok(Check { name: "pulse gradient against finite differences", value: worst, passed: worst < 1e-4 })
}

fn check_evolution_is_physical(cfg: &RunConfig) -> Result<Check> {
    let model = CombModel::build(&cfg.device, &cfg.effective_comb())?;
    let (zero, one) = t4c_words(&cfg.code.words(), cfg.comb.cavity_dim)?;
    let psi = (&zero.amps + &one.amps).unscale(2f64.sqrt());
    let full = model.embed_operator(&(&psi * psi.adjoint()));
    let out = model.evolve(&full, &[10.0], &EvolveOptions::default())?.remove(0);
    let trace = (out.trace().re - 1.0).abs();
    let herm = (&out - out.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let neg = (-(&out + out.adjoint()).scale(0.5).symmetric_eigenvalues().min()).max(0.0);
    let dev = trace.max(herm).max(neg);
    Ok(Check { name: "trace, hermiticity and positivity under the comb model", value: dev, passed: dev < 1e-6 })
}

pub fn validate(cfg: &RunConfig) -> Result<RunOutput> {
    let checks = [
        check_codewords()?,
        check_trajectory_vs_master_equation(cfg)?,
        check_budget(cfg)?,
        check_wigner_parity()?,
        check_grape_gradient()?,
        check_evolution_is_physical(cfg)?,
    ];
    let rows: Vec<Vec<String>> = checks.iter().map(|c| vec![c.name.to_string(), format_f64(c.value), (c.passed as u8).to_string()]).collect();
    let csv = csv_text(&["check", "deviation", "passed"], &rows)?;
    let report: String = checks.iter().map(|c| format!("{} {} ({:.3e})\n", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value)).collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let summary = json!({ "checks": checks.len(), "failed": failed });
    let failure = (!failed.is_empty()).then(|| format!("failed checks: {}", failed.join(", ")));
    Ok(RunOutput { csv, figure: "invariant checks", summary, report, failure })
}
