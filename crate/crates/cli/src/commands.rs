use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use codesign_core::catalog::{load_catalog, validate_platform, CatalogError, CatalogFile};
use codesign_core::cig::{
    build_default_mav_graph, cluster_histogram, compute_impact_paths, Cluster, InteractionGraph,
};
use codesign_core::dse::{
    self, Axis, Constraints, DesignGrid, DseError, FieldSample, Metric, SweepMission,
};
use codesign_core::mission_sim::{simulate, OffloadConfig, SimError, SimTrace};
use codesign_core::pipeline_models::{
    mission_time, response_profile, stopping_distance, v_max_bound, PipelineTiming,
    ResponseProfile, Scheduling, SlowDownRatio,
};
use codesign_core::vehicle_dynamics::{
    max_acceleration, total_mass, total_power, FlightState, PowerModel, RotorPowerModel,
};

use crate::report::{Cell, Format, Sink, Table};
use crate::scenario::{self, resolve_power_model, Scenario};
use crate::{CaseStudy, Cli, Command, MetricArg, ResponseArg, SchedulingArg};

/// Bad invocation or input that is not a modelling failure.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 1 for usage errors, 2 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let is_usage = e.chain().any(|c| {
        c.is::<UsageError>()
            || c.is::<serde_json::Error>()
            || c.is::<std::io::Error>()
            || matches!(
                c.downcast_ref::<CatalogError>(),
                Some(
                    CatalogError::Io { .. }
                        | CatalogError::Parse { .. }
                        | CatalogError::NotFound { .. }
                        | CatalogError::DuplicateName { .. }
                )
            )
            || matches!(c.downcast_ref::<SimError>(), Some(SimError::KnobSyntax(_)))
            || matches!(c.downcast_ref::<DseError>(), Some(DseError::GridSyntax(_)))
    });
    if is_usage {
        1
    } else {
        2
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let sink = Sink {
        format: g.format,
        out_dir: g.out_dir.clone(),
        verbose: g.verbose,
    };
    let catalog = match &g.catalog {
        Some(path) => {
            if g.verbose > 0 {
                eprintln!("catalog: {}", path.display());
            }
            let mut c = load_catalog(path)?;
            let builtin = CatalogFile::builtin();
            if c.bodies.is_empty() {
                c.bodies = builtin.bodies;
            }
            if c.power_models.is_empty() {
                c.power_models = builtin.power_models;
            }
            c
        }
        None => CatalogFile::builtin(),
    };
    match &cli.command {
        Command::Platforms => platforms(&catalog, &sink),
        Command::Vmax {
            body,
            platform,
            scheduling,
        } => vmax(&catalog, &sink, body, platform.as_deref(), *scheduling),
        Command::Mission {
            length,
            sdr,
            body,
            response,
            power_model,
        } => mission(&catalog, &sink, *length, *sdr, body, *response, power_model),
        Command::Simulate {
            mission,
            platform,
            knob,
            offload,
            remote_tdp_excluded,
            timing,
            scheduling,
            trace,
        } => {
            let text = read(mission)?;
            let mut sc = Scenario::from_scenario_or_mission(&text)
                .map_err(|e| usage(format!("{}: {e:#}", mission.display())))?;
            if let Some(t) = timing {
                sc.timing = Some(parse_timing(t)?);
            }
            if let (Some(s), Some(t)) = (scheduling, sc.timing.as_mut()) {
                t.scheduling = scheduling_of(*s);
            }
            let offload = offload
                .as_deref()
                .map(|o| parse_offload(o, *remote_tdp_excluded))
                .transpose()?;
            let setup = sc.setup(
                &catalog,
                platform.as_deref(),
                knob.as_deref(),
                offload,
                g.dt,
            )?;
            if g.verbose > 0 {
                eprintln!(
                    "simulating {} segments on {} with knob {} (dt {} s)",
                    setup.mission.segments.len(),
                    setup.platform.name,
                    setup.knob,
                    setup.dt_s
                );
            }
            let result = simulate(&setup)?;
            let mut summary = summary_table("summary");
            let offload_label = offload_label(setup.offload.as_ref());
            push_summary(
                &mut summary,
                &sc.name,
                &setup.knob.to_string(),
                &offload_label,
                &result,
            );
            let trace_table = trace_table(&result);
            if let Some(dir) = &sink.out_dir {
                sink.emit(&[&summary, &trace_table])?;
                let events = serde_json::to_string_pretty(&result.events)? + "\n";
                sink.write_file(&dir.join("events.json"), &events)?;
                Ok(())
            } else if *trace {
                sink.emit(&[&trace_table])
            } else {
                sink.emit(&[&summary])
            }
        }
        Command::Dse {
            grid,
            constraints,
            slice,
            metric,
            length,
            sdr,
            body,
            power_model,
        } => {
            let grid = parse_grid(grid)?;
            let constraints: Constraints = serde_json::from_str(&read(constraints)?)
                .with_context(|| format!("{}", constraints.display()))?;
            let slice = slice.as_deref().map(parse_slice).transpose()?;
            let metric = match metric {
                MetricArg::Time => Metric::MissionTime,
                MetricArg::Energy => Metric::Energy,
            };
            let body = catalog.body(body)?;
            let model = resolve_power_model(power_model, &catalog)?;
            let mission = SweepMission {
                path_length_m: *length,
                sdr: SlowDownRatio::new(*sdr)?,
            };
            dse_command(
                &sink,
                &grid,
                body,
                &mission,
                &constraints,
                &model,
                slice,
                metric,
            )
        }
        Command::Cig { paths, graph } => {
            let g = match graph {
                Some(p) => InteractionGraph::from_json(&read(p)?)
                    .with_context(|| format!("{}", p.display()))?,
                None => build_default_mav_graph(),
            };
            cig(&sink, &g, *paths)
        }
        Command::Casestudy { which, scenario } => {
            let text = match scenario {
                Some(p) => read(p)?,
                None => match which {
                    CaseStudy::Knob => scenario::KNOB.to_string(),
                    CaseStudy::Offload => scenario::OFFLOAD.to_string(),
                },
            };
            let sc = Scenario::from_json(&text)?;
            casestudy(&catalog, &sink, &sc, g.dt)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn scheduling_of(s: SchedulingArg) -> Scheduling {
    match s {
        SchedulingArg::Seq => Scheduling::Sequential,
        SchedulingArg::Pipe => Scheduling::Pipelined,
    }
}

fn parse_timing(s: &str) -> Result<PipelineTiming> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            usage(format!(
                "--timing `{s}`: expected perception,planning,control"
            ))
        })?;
    let [p, pl, c] = v[..] else {
        return Err(usage(format!("--timing `{s}`: expected three values")));
    };
    Ok(PipelineTiming::sequential(p, pl, c))
}

fn parse_offload(s: &str, remote_tdp_excluded: bool) -> Result<OffloadConfig> {
    let err = || usage(format!("--offload `{s}`: expected speedup,rtt_s"));
    let (speedup, rtt) = s.split_once(',').ok_or_else(err)?;
    let mut o = OffloadConfig::planning(
        speedup.trim().parse().map_err(|_| err())?,
        rtt.trim().parse().map_err(|_| err())?,
    );
    o.remote_tdp_excluded = remote_tdp_excluded;
    Ok(o)
}

fn parse_grid(s: &str) -> Result<DesignGrid> {
    let path = Path::new(s);
    if path.is_file() {
        let grid: DesignGrid =
            serde_json::from_str(&read(path)?).with_context(|| format!("{}", path.display()))?;
        grid.validate()?;
        Ok(grid)
    } else {
        Ok(s.parse()?)
    }
}

fn parse_slice(s: &str) -> Result<(Axis, f64)> {
    let err = || usage(format!("--slice `{s}`: expected axis=value"));
    let (axis, value) = s.split_once('=').ok_or_else(err)?;
    Ok((
        axis.parse().map_err(|_| err())?,
        value.trim().parse().map_err(|_| err())?,
    ))
}

fn platforms(catalog: &CatalogFile, sink: &Sink) -> Result<()> {
    let mut t = Table::new(
        "platforms",
        &[
            ("platform", 0),
            ("sa_latency_s", 3),
            ("sa_throughput_hz", 2),
            ("response_s", 3),
            ("declared_total_s", 3),
            ("deviation_pct", 2),
            ("tdp_w", 1),
            ("mass_kg", 3),
            ("valid", 0),
        ],
    );
    for (p, declared) in catalog.platforms.iter().zip(&catalog.declared_totals) {
        let response = p.response_s();
        let deviation = declared.map(|d| 100.0 * (response - d).abs() / d);
        t.push(vec![
            p.name.as_str().into(),
            p.sa_latency_s.into(),
            p.sa_throughput_hz.into(),
            response.into(),
            (*declared).into(),
            deviation.into(),
            p.tdp_w.into(),
            p.mass_kg.into(),
            validate_platform(p, *declared).is_ok().into(),
        ]);
    }
    sink.emit(&[&t])
}

fn vmax(
    catalog: &CatalogFile,
    sink: &Sink,
    body: &str,
    platform: Option<&str>,
    scheduling: SchedulingArg,
) -> Result<()> {
    let body = catalog.body(body)?;
    let platforms = match platform {
        Some(name) => vec![catalog.platform(name)?.clone()],
        None => catalog.platforms.clone(),
    };
    let mut t = Table::new(
        "vmax",
        &[
            ("platform", 0),
            ("scheduling", 0),
            ("m_total_kg", 3),
            ("a_max_mps2", 3),
            ("sa_latency_s", 3),
            ("blind_s", 3),
            ("response_s", 3),
            ("v_max_mps", 3),
            ("stopping_m", 3),
        ],
    );
    for p in &platforms {
        let m = total_mass(body, p);
        let a = max_acceleration(body, m)?;
        let profile: ResponseProfile = match scheduling {
            SchedulingArg::Pipe => p.response_profile()?,
            SchedulingArg::Seq => response_profile(&PipelineTiming::single_stage(
                p.sa_latency_s,
                Scheduling::Sequential,
            ))?,
        };
        let v = v_max_bound(a, body.sensing_range_m, profile.response_s)?;
        t.push(vec![
            p.name.as_str().into(),
            match scheduling {
                SchedulingArg::Seq => "seq",
                SchedulingArg::Pipe => "pipe",
            }
            .into(),
            m.into(),
            a.into(),
            profile.sa_latency_s.into(),
            profile.blind_s.into(),
            profile.response_s.into(),
            v.into(),
            stopping_distance(v, a)?.into(),
        ]);
    }
    sink.emit(&[&t])
}

fn mission(
    catalog: &CatalogFile,
    sink: &Sink,
    length: f64,
    sdr: f64,
    body: &str,
    response: ResponseArg,
    power_model: &str,
) -> Result<()> {
    let body = catalog.body(body)?;
    let model = resolve_power_model(power_model, catalog)?;
    let sdr = SlowDownRatio::new(sdr).map_err(|e| usage(format!("--sdr: {e}")))?;
    let mut t = Table::new(
        "mission",
        &[
            ("platform", 0),
            ("m_total_kg", 3),
            ("a_max_mps2", 3),
            ("response_s", 3),
            ("v_max_mps", 2),
            ("v_avg_mps", 2),
            ("mission_time_s", 1),
            ("rotor_w", 1),
            ("total_w", 1),
            ("energy_j", 0),
        ],
    );
    for p in &catalog.platforms {
        let m = total_mass(body, p);
        let a = max_acceleration(body, m)?;
        let r = match response {
            ResponseArg::Zero => 0.0,
            ResponseArg::Platform => p.response_s(),
        };
        let v_max = v_max_bound(a, body.sensing_range_m, r)?;
        let v_avg = v_max / sdr.value();
        let time = mission_time(length, v_avg)?;
        let rotor = model.rotor_power(&FlightState::horizontal(v_avg, 0.0, m));
        let total = total_power(rotor, p.tdp_w);
        t.push(vec![
            p.name.as_str().into(),
            m.into(),
            a.into(),
            r.into(),
            v_max.into(),
            v_avg.into(),
            time.into(),
            rotor.into(),
            total.into(),
            (total * time).into(),
        ]);
    }
    sink.emit(&[&t])
}

fn summary_table(name: &str) -> Table {
    Table::new(
        name,
        &[
            ("variant", 0),
            ("knob", 0),
            ("offload", 0),
            ("status", 0),
            ("mission_time_s", 2),
            ("energy_j", 0),
            ("distance_m", 1),
            ("avg_v_mps", 3),
            ("hover_s", 2),
            ("battery_frac_remaining", 4),
        ],
    )
}

fn push_summary(t: &mut Table, variant: &str, knob: &str, offload: &str, trace: &SimTrace) {
    let s = &trace.summary;
    t.push(vec![
        variant.into(),
        knob.into(),
        offload.into(),
        s.status.to_string().into(),
        s.mission_time_s.into(),
        s.energy_j.into(),
        s.distance_m.into(),
        s.avg_v_mps.into(),
        s.hover_s.into(),
        s.battery_frac_remaining.into(),
    ]);
}

fn trace_table(trace: &SimTrace) -> Table {
    let mut t = Table::new(
        "trace",
        &[
            ("t_s", 2),
            ("x_m", 3),
            ("v_mps", 3),
            ("power_w", 1),
            ("charge_c", 1),
        ],
    );
    for s in &trace.samples {
        t.push(vec![
            s.t_s.into(),
            s.x_m.into(),
            s.v_mps.into(),
            s.power_w.into(),
            s.charge_c.into(),
        ]);
    }
    t
}

fn offload_label(o: Option<&OffloadConfig>) -> String {
    match o {
        None => String::new(),
        Some(o) => format!(
            "speedup={} rtt_s={}{}",
            o.speedup,
            o.rtt_s,
            if o.remote_tdp_excluded {
                " remote_tdp"
            } else {
                ""
            }
        ),
    }
}

fn casestudy(catalog: &CatalogFile, sink: &Sink, sc: &Scenario, dt: Option<f64>) -> Result<()> {
    if sc.variants.is_empty() {
        return Err(usage(format!("scenario `{}` has no variants", sc.name)));
    }
    if sink.verbose > 0 && !sc.description.is_empty() {
        eprintln!("{}: {}", sc.name, sc.description);
    }
    let mut t = summary_table(&format!("casestudy_{}", sc.name));
    for v in &sc.variants {
        let setup = sc.setup(catalog, None, v.knob.as_deref(), v.offload, dt)?;
        let trace = simulate(&setup)?;
        push_summary(
            &mut t,
            &v.label,
            &setup.knob.to_string(),
            &offload_label(setup.offload.as_ref()),
            &trace,
        );
    }
    sink.emit(&[&t])
}

fn cig(sink: &Sink, g: &InteractionGraph, paths: bool) -> Result<()> {
    let found = compute_impact_paths(g)?;
    if paths {
        if sink.format == Format::Table && sink.out_dir.is_none() {
            for p in &found {
                println!("{p}");
            }
            return Ok(());
        }
        let mut t = Table::new("cig_paths", &[("cluster", 0), ("path", 0)]);
        for p in &found {
            t.push(vec![
                p.cluster.to_string().into(),
                p.nodes.join(" -> ").into(),
            ]);
        }
        return sink.emit(&[&t]);
    }
    let hist = cluster_histogram(&found);
    let count = |c| hist.get(&c).copied().unwrap_or(0);
    let mut t = Table::new(
        "cig",
        &[
            ("nodes", 0),
            ("edges", 0),
            ("impact_paths", 0),
            ("performance", 0),
            ("mass", 0),
            ("power", 0),
        ],
    );
    t.push(vec![
        g.node_count().into(),
        g.edge_count().into(),
        found.len().into(),
        count(Cluster::Performance).into(),
        count(Cluster::Mass).into(),
        count(Cluster::Power).into(),
    ]);
    sink.emit(&[&t])
}

#[allow(clippy::too_many_arguments)]
fn dse_command(
    sink: &Sink,
    grid: &DesignGrid,
    body: &codesign_core::vehicle_dynamics::DroneBody,
    mission: &SweepMission,
    constraints: &Constraints,
    model: &PowerModel,
    slice: Option<(Axis, f64)>,
    metric: Metric,
) -> Result<()> {
    let samples = dse::sweep(grid, body, mission, constraints, model)?;
    let mut field = Table::new(
        "dse_field",
        &[
            ("mass_kg", 3),
            ("power_w", 1),
            ("response_s", 3),
            ("mission_time_s", 1),
            ("energy_j", 0),
            ("feasible", 0),
            ("reason", 0),
        ],
    );
    for s in &samples {
        field.push(field_row(s));
    }

    let mut sens = Table::new(
        "dse_sensitivity",
        &[
            ("metric", 0),
            ("axis", 0),
            ("mean", 4),
            ("std", 4),
            ("pairs", 0),
        ],
    );
    for (mname, m) in [
        ("mission_time", Metric::MissionTime),
        ("energy", Metric::Energy),
    ] {
        for axis in Axis::ALL {
            let row = match dse::sensitivity(&samples, m, axis) {
                Ok(s) => vec![
                    mname.into(),
                    axis.to_string().into(),
                    s.mean.into(),
                    s.std.into(),
                    s.pairs.into(),
                ],
                Err(DseError::NoPairs(_)) => {
                    vec![
                        mname.into(),
                        axis.to_string().into(),
                        f64::NAN.into(),
                        f64::NAN.into(),
                        0usize.into(),
                    ]
                }
                Err(e) => return Err(e.into()),
            };
            sens.push(row);
        }
    }

    let mut feasible = Table::new("dse_feasible", &[("power_w", 1), ("feasible_cells", 0)]);
    for (p, n) in dse::feasible_counts(&samples, Axis::Power) {
        feasible.push(vec![p.into(), n.into()]);
    }

    let gradient = match slice {
        None => None,
        Some((axis, value)) => {
            let sliced = dse::slice(&samples, axis, value);
            let others: Vec<Axis> = Axis::ALL.into_iter().filter(|&a| a != axis).collect();
            let g = dse::gradient_field(&sliced, metric, (others[0], others[1]))?;
            let mut t = Table::new(
                "dse_gradient",
                &[
                    ("axis1", 3),
                    ("axis2", 3),
                    ("grad1", 4),
                    ("grad2", 4),
                    ("defined", 0),
                ],
            );
            for c in &g.cells {
                t.push(vec![
                    c.x1.into(),
                    c.x2.into(),
                    c.grad1.into(),
                    c.grad2.into(),
                    c.defined.into(),
                ]);
            }
            if sink.verbose > 0 {
                eprintln!("gradient over {} x {} at {axis}", g.axis1, g.axis2);
            }
            Some(t)
        }
    };

    let mut tables: Vec<&Table> = Vec::new();
    // the full field is too long to read as a table
    if sink.format != Format::Table || sink.out_dir.is_some() {
        tables.push(&field);
    }
    tables.push(&sens);
    tables.push(&feasible);
    if let Some(g) = &gradient {
        tables.push(g);
    }
    sink.emit(&tables)
}

fn field_row(s: &FieldSample) -> Vec<Cell> {
    vec![
        s.mass_kg.into(),
        s.power_w.into(),
        s.response_s.into(),
        s.mission_time_s.into(),
        s.energy_j.into(),
        s.feasible.into(),
        s.infeasibility_reason
            .map(|r| r.to_string())
            .unwrap_or_default()
            .into(),
    ]
}
