use std::time::Instant;

use measrepro::coding::{
    associated_channel, blahut_arimoto, block_distribution_exact, repetition_error_exact, simulate_block_protocol,
    BlockCode, ClassicalChannel, CodeKind, DEFAULT_CAPACITY_ITER, EXACT_STRING_LIMIT,
};
use measrepro::qcore::{haar_state, named, validate_povm, Povm, Rng};
use measrepro::rms::{rms_exact_povm, rms_monte_carlo_instrument, rms_monte_carlo_povm};
use measrepro::subroutines::{
    build_measurement_isometry, cloning_error_rate, pairwise_min_chernoff, run_post_measurement, select_cloning_basis,
    ErrorRateMode, ISOMETRY_TOL,
};
use measrepro::vnsynth::{
    build_partition_povm, construct_states, exhaustive_search, hill_climb_search, implemented_povm, map_from_fn,
    string_count, QuditQpProblem, EXHAUSTIVE_STRING_LIMIT,
};

use crate::cli::{ChannelSource, Cli, CloneMode, CodeChoice, Command, SearchMode};
use crate::error::{CliError, CliResult};
use crate::measurement::{load_measurement, save_measurement, Loaded, Measurement};
use crate::report::{digest, Row, RunReport, Tolerance};
use crate::reproduce::{reproduce_rows, ReproduceOptions};

/// Consistency checks inside commands.
pub const CHECK_TOL: f64 = 1e-10;

struct Ctx<'a> {
    cli: &'a Cli,
    inputs: Vec<Vec<u8>>,
}

impl Ctx<'_> {
    fn load(&mut self, source: &str) -> CliResult<Loaded> {
        let l = load_measurement(source)?;
        self.inputs.push(l.digest_bytes.clone());
        Ok(l)
    }

    fn rng(&self, stream: u64) -> Rng {
        Rng::new(self.cli.global.seed, stream)
    }

    fn samples(&self, default: usize) -> usize {
        self.cli.global.samples.unwrap_or(default)
    }

    fn max_n(&self, default: usize) -> usize {
        self.cli.global.max_n.unwrap_or(default)
    }

    fn channel(&mut self, src: &ChannelSource) -> CliResult<ClassicalChannel> {
        match (&src.measurement, src.bsc) {
            (_, Some(p)) => {
                self.inputs.push(format!("bsc:{p}").into_bytes());
                ClassicalChannel::binary_symmetric(p).map_err(|e| CliError::Usage(e.to_string()))
            }
            (Some(m), None) => Ok(associated_channel(&self.load(m)?.measurement.povm(), None)?),
            (None, None) => Err(CliError::Usage("a measurement or --bsc is required".into())),
        }
    }
}

fn check(name: impl Into<String>, value: f64, expected: f64) -> Row {
    Row::value(name, value).check(expected, Tolerance::Absolute(CHECK_TOL))
}

fn validate(ctx: &mut Ctx, source: &str) -> CliResult<Vec<Row>> {
    let l = ctx.load(source)?;
    let mut rows = Vec::new();
    match &l.measurement {
        Measurement::Povm(p) => {
            let report = validate_povm(p);
            rows.push(Row::value("dim", p.dim() as f64).note("povm"));
            rows.push(Row::value("outcomes", p.outcomes() as f64));
            rows.push(Row::value("completeness_defect", report.completeness_defect));
            rows.push(Row::value("positivity_defect", report.positivity_defect));
            rows.push(Row::value("trivial", f64::from(u8::from(p.is_trivial()))));
        }
        Measurement::Instrument(inst) => {
            rows.push(Row::value("dim_in", inst.dim_in() as f64).note("instrument"));
            rows.push(Row::value("dim_out", inst.dim_out() as f64));
            rows.push(Row::value("outcomes", inst.outcomes() as f64));
            rows.push(Row::value("max_kraus_rank", inst.max_kraus_rank() as f64));
            rows.push(Row::value("completeness_defect", inst.completeness_defect()));
        }
    }
    Ok(rows)
}

fn synth(ctx: &mut Ctx, source: &str, uses: usize, mode: SearchMode, restarts: usize, target: usize) -> CliResult<Vec<Row>> {
    let povm = ctx.load(source)?.measurement.povm();
    if uses == 0 {
        return Err(CliError::Usage("--uses must be at least 1".into()));
    }
    if target < 2 {
        return Err(CliError::Usage("--target must be at least 2".into()));
    }
    let m = povm.outcomes();
    if target > 2 {
        let map = map_from_fn(m, uses, |s| s.iter().sum::<usize>() % target);
        let protocol = build_partition_povm(&povm, uses, &map, target)?;
        let sol = QuditQpProblem::from_protocol(&protocol)?.solve()?;
        let mut rows = vec![
            Row::value("uses", uses as f64).note(format!("map: outcome-sum mod {target}")),
            Row::value("epsilon", sol.epsilon).note("1/(m d(d+1)) normalization"),
            Row::value("epsilon_unaveraged", sol.epsilon_unaveraged).note("1/(d(d+1)) normalization"),
            Row::value("kkt_residual", sol.kkt_residual),
            Row::value("iterations", sol.iterations as f64),
        ];
        for (a, col) in sol.table.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                rows.push(Row::value(format!("x[{a},{i}]"), *x));
            }
        }
        rows.push(Row::value("states", f64::NAN).note("state construction needs a two-outcome target"));
        return Ok(rows);
    }
    let strings = string_count(m, uses).unwrap_or(usize::MAX);
    let exhaustive = match mode {
        SearchMode::Exhaustive => true,
        SearchMode::Hill => false,
        SearchMode::Auto => strings <= EXHAUSTIVE_STRING_LIMIT,
    };
    let r = if exhaustive {
        exhaustive_search(&povm, uses)?
    } else {
        hill_climb_search(&povm, uses, restarts, &mut ctx.rng(20))?
    };
    let s = r.solution;
    let prep = construct_states(&r.protocol, &[s.x, s.y])?;
    let implemented = implemented_povm(&prep, &r.protocol)?;
    let achieved = rms_exact_povm(&implemented, &named::von_neumann(2))?;
    let mut rows = vec![
        Row::value("uses", uses as f64).note(if exhaustive { "exhaustive" } else { "hill climb" }),
        Row::value("partitions_evaluated", r.evaluated as f64),
        Row::value("co_optimal_partitions", r.co_optimal.len() as f64),
        Row::value("lambda_min", s.lambda_min),
        Row::value("lambda_max", s.lambda_max),
        Row::value("x", s.x).note(s.region.name()),
        Row::value("y", s.y),
        Row::value("epsilon", s.epsilon),
        Row::value("ancilla_qubits", prep.ancilla_qubits as f64),
        check("implemented_epsilon", achieved, s.epsilon),
    ];
    let m0 = implemented.element(0);
    rows.push(check("implemented_M0[0,0]", m0[(0, 0)].re, s.x));
    rows.push(check("implemented_M0[1,1]", m0[(1, 1)].re, s.y));
    rows.push(check("implemented_M0[0,1]", m0[(0, 1)].norm(), 0.0));
    let map: String = r.protocol.map().iter().map(|b| char::from(b'0' + *b as u8)).collect();
    rows.push(Row::value("outcome_strings", strings as f64).note(format!("map {map}")));
    Ok(rows)
}

fn rms(ctx: &mut Ctx, implemented: &str, target: Option<&str>) -> CliResult<Vec<Row>> {
    let imp = ctx.load(implemented)?.measurement;
    let tgt = match target {
        Some(t) => ctx.load(t)?.measurement,
        None => Measurement::Povm(named::von_neumann(imp.povm().dim())),
    };
    let (pi, pt) = (imp.povm(), tgt.povm());
    let exact = rms_exact_povm(&pi, &pt)?;
    let n = ctx.samples(100_000);
    let mc = rms_monte_carlo_povm(&pi, &pt, n, &ctx.rng(30))?;
    let mut rows = vec![
        Row::value("epsilon_exact", exact).note("averaged over outcomes"),
        Row::value("epsilon_exact_unaveraged", exact * (pi.outcomes() as f64).sqrt()).note("summed over outcomes"),
        Row::value("epsilon_mc", mc.value)
            .with_error(mc.standard_error)
            .note(format!("{n} Haar samples"))
            .check(exact, Tolerance::Sigma(3.0)),
    ];
    if let (Measurement::Instrument(a), Measurement::Instrument(b)) = (&imp, &tgt) {
        let e = rms_monte_carlo_instrument(a, b, n, &ctx.rng(31))?;
        rows.push(Row::value("epsilon_instrument_mc", e.value).with_error(e.standard_error));
    }
    Ok(rows)
}

fn postmeas(ctx: &mut Ctx, source: &str, states: usize) -> CliResult<Vec<Row>> {
    let inst = ctx.load(source)?.measurement.instrument()?;
    let iso = build_measurement_isometry(&inst)?;
    let mut rng = ctx.rng(40);
    let (mut prob_err, mut state_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..states {
        let psi = haar_state(inst.dim_in(), &mut rng);
        let rho = psi.density();
        for b in run_post_measurement(&iso, &psi)? {
            let p = inst.subchannel(b.outcome, &rho)?.trace().re;
            prob_err = prob_err.max((p - b.probability).abs());
            if let Some(state) = &b.state {
                let (_, post) = inst.apply_subchannel(b.outcome, &rho)?;
                state_err = state_err.max(state.distance(&post));
            }
        }
    }
    let [s, a, j] = iso.register_dims();
    Ok(vec![
        Row::value("isometry_defect", iso.isometry_defect())
            .note(format!("registers {s}x{a}x{j}"))
            .check(0.0, Tolerance::Absolute(ISOMETRY_TOL)),
        check("max_probability_error", prob_err, 0.0).note(format!("{states} Haar states")),
        check("max_post_state_error", state_err, 0.0),
    ])
}

fn clone(ctx: &mut Ctx, source: &str, mode: CloneMode) -> CliResult<Vec<Row>> {
    let povm: Povm = ctx.load(source)?.measurement.povm();
    let basis = select_cloning_basis(&povm)?;
    let mut rows = Vec::new();
    for (i, row) in basis.table.iter().enumerate() {
        for (a, p) in row.iter().enumerate() {
            rows.push(Row::value(format!("P({a}|{i})"), *p));
        }
    }
    for (k, theta) in basis.rotations.iter().enumerate() {
        rows.push(Row::value(format!("rotation_{k}"), *theta).note("radians"));
    }
    rows.push(Row::value("min_row_distance", basis.min_row_distance()).note("total variation"));
    let xi = pairwise_min_chernoff(&basis.table)?;
    rows.push(Row::value("chernoff_information", xi).note("nats, closest pair"));
    let mode = match mode {
        CloneMode::Exact => ErrorRateMode::Exact,
        CloneMode::Sampled => ErrorRateMode::Sampled {
            trials: ctx.samples(100_000),
        },
    };
    for n in 1..=ctx.max_n(10) {
        let e = cloning_error_rate(&basis, n, mode, &ctx.rng(50 + n as u64))?;
        let mut row = Row::value(format!("error_N{n}"), e.average);
        if let ErrorRateMode::Sampled { .. } = mode {
            row = row.with_error(e.average_standard_error);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn capacity(ctx: &mut Ctx, src: &ChannelSource) -> CliResult<Vec<Row>> {
    let ch = ctx.channel(src)?;
    let c = blahut_arimoto(&ch, ctx.cli.global.tol, DEFAULT_CAPACITY_ITER)?;
    let mut rows = vec![
        Row::value("capacity_bits", c.capacity).note("lower bound"),
        Row::value("capacity_upper_bound", c.upper_bound),
        Row::value("gap", c.gap),
        Row::value("iterations", c.iterations as f64),
    ];
    for (x, p) in c.input_distribution.iter().enumerate() {
        rows.push(Row::value(format!("input_p[{x}]"), *p));
    }
    for (x, row) in ch.rows().iter().enumerate() {
        for (a, p) in row.iter().enumerate() {
            rows.push(Row::value(format!("P({a}|{x})"), *p));
        }
    }
    Ok(rows)
}

fn block(
    ctx: &mut Ctx,
    src: &ChannelSource,
    k: usize,
    length: Option<usize>,
    choice: CodeChoice,
    copies: usize,
) -> CliResult<Vec<Row>> {
    let ch = ctx.channel(src)?;
    let d = ch.inputs();
    let code = match choice {
        CodeChoice::Identity => BlockCode::identity(k, d)?,
        CodeChoice::Repetition => BlockCode::repetition(k, copies, d)?,
        CodeChoice::Random => {
            let n = length.ok_or_else(|| CliError::Usage("--length is required for random codes".into()))?;
            BlockCode::random(k, n, d, &mut ctx.rng(60))?
        }
    };
    let cap = blahut_arimoto(&ch, ctx.cli.global.tol, DEFAULT_CAPACITY_ITER)?;
    let trials = ctx.samples(100_000);
    let sim = simulate_block_protocol(&ch, &code, None, trials, &ctx.rng(61))?;
    let mut rows = vec![
        Row::value("message_symbols_k", k as f64),
        Row::value("block_length_N", code.block_length() as f64),
        Row::value("information_rate", code.information_rate()).note("bits per use, k log2(d)/N"),
        Row::value("uses_per_symbol", code.uses_per_symbol()).note("N/k"),
        Row::value("capacity_bits", cap.capacity),
        Row::value("block_error_sampled", sim.error_rate)
            .with_error(sim.standard_error)
            .note(format!("{trials} trials")),
        Row::value("undecodable_fraction", sim.undecodable),
    ];
    let exact = match code.kind() {
        CodeKind::Repetition { copies } => Some(repetition_error_exact(&ch, k, copies)?),
        CodeKind::Random => {
            let strings = (ch.outputs() as f64).powi(code.block_length() as i32);
            if strings <= EXACT_STRING_LIMIT as f64 && strings * code.messages() as f64 <= 1e9 {
                Some(block_distribution_exact(&ch, &code, None)?.error_rate)
            } else {
                None
            }
        }
    };
    if let Some(e) = exact {
        rows.push(Row::value("block_error_exact", e));
    }
    Ok(rows)
}

fn reproduce(ctx: &mut Ctx, overrides: &[String]) -> CliResult<Vec<Row>> {
    let mut o = ReproduceOptions::new(ctx.cli.global.seed);
    o.samples = ctx.samples(o.samples);
    o.max_n = ctx.max_n(o.max_n);
    for ov in overrides {
        let (name, path) = ov
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected NAME=FILE, got `{ov}`")))?;
        match name {
            "trine" => o.trine = ctx.load(path)?.measurement.povm(),
            other => return Err(CliError::Usage(format!("only `trine` can be overridden, got `{other}`"))),
        }
    }
    Ok(reproduce_rows(&o))
}

/// Executes one command.
pub fn run(cli: &Cli) -> CliResult<RunReport> {
    let start = Instant::now();
    let mut ctx = Ctx {
        cli,
        inputs: Vec::new(),
    };
    let rows = match &cli.command {
        Command::Validate { measurement } => validate(&mut ctx, measurement)?,
        Command::Synth {
            measurement,
            uses,
            search,
            restarts,
            target,
        } => synth(&mut ctx, measurement, *uses, *search, *restarts, *target)?,
        Command::Rms { implemented, target } => rms(&mut ctx, implemented, target.as_deref())?,
        Command::Postmeas { measurement, states } => postmeas(&mut ctx, measurement, *states)?,
        Command::Clone { measurement, mode } => clone(&mut ctx, measurement, *mode)?,
        Command::Capacity { source } => capacity(&mut ctx, source)?,
        Command::Block {
            source,
            k,
            length,
            code,
            copies,
        } => block(&mut ctx, source, *k, *length, *code, *copies)?,
        Command::Export { measurement, path } => {
            let l = ctx.load(measurement)?;
            save_measurement(path, &l.measurement)?;
            let p = l.measurement.povm();
            vec![Row::value("dim", p.dim() as f64), Row::value("outcomes", p.outcomes() as f64)]
        }
        Command::ReproducePaper { overrides } => reproduce(&mut ctx, overrides)?,
    };
    let args = format!("{:?}|{:?}|{:?}|{}", cli.command, cli.global.samples, cli.global.max_n, cli.global.tol);
    let mut parts: Vec<&[u8]> = vec![cli.command.name().as_bytes(), args.as_bytes()];
    parts.extend(ctx.inputs.iter().map(Vec::as_slice));
    Ok(RunReport {
        command: cli.command.name().to_string(),
        inputs_digest: digest(&parts),
        seed: cli.global.seed,
        rows,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}
