//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::HashSet;
use std::fs;
use std::net::TcpListener;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::Instant;

use stepsim::config::RunConfig;
use stepsim::driver::{run_sim, ArrivalOrder, RunOutput, SimOptions};
use stepsim::heuristics::{Band, HeuristicConfig, Mode};
use stepsim::manet::{Manet, ModelConfig};
use stepsim::metrics::{read_lp_records, StepTrace};
use stepsim::rng::RngStream;
use stepsim::transport::frame::{
    decode_frame, encode_frame, EventBody, Frame, HelloBody, MigrateAnnounceBody, MigrateDataBody, StepDoneBody,
    MAX_PAYLOAD,
};
use stepsim::transport::{LinkSpec, NetProfile};
use stepsim::{LpId, SeId, Timestep};

// Tolerances.
const STATIC_LCR: f64 = 1.0 / 3.0;
const STATIC_LCR_TOL: f64 = 0.05;
const STATIC_SETTLE_STEPS: u64 = 10;
const GAIA_MIN_FINAL_LCR: f64 = 0.60;
const GAIA_MIN_GAIN_OVER_STATIC: f64 = 0.20;
const DENSITY_TOL: f64 = 0.05;
const SCALING_RANGE: (f64, f64) = (14.5, 17.5);
const SLOWED_LP_MAX: u32 = 800;
const CODEC_FRAMES: usize = 100_000;
const FUZZ_INPUTS: usize = 100_000;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn preset(name: &str, overrides: &[&str]) -> RunConfig {
    let ov: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(&configs().join(name), &ov).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn simulate(cfg: &RunConfig) -> RunOutput {
    let opts = SimOptions {
        profile: cfg.profile.clone(),
        cost: cfg.cost,
        order: ArrivalOrder::Network,
        net_seed: cfg.run.global_seed,
    };
    let model = Arc::new(Manet::new(cfg.model.clone()));
    run_sim(model, cfg.run.num_lps, &cfg.heuristics, cfg.model.steps, &opts, |_, _| {}).expect("simulation aborted")
}

fn traces(cfg: &RunConfig) -> Vec<StepTrace> {
    simulate(cfg).traces().expect("merge")
}

fn wct_s(t: &[StepTrace]) -> f64 {
    t.iter().map(|s| s.wall_nanos).sum::<u64>() as f64 / 1e9
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// 1. Determinism across LP counts, modes and real TCP processes.

fn digests(t: &[StepTrace]) -> Vec<u64> {
    t.iter().map(|s| s.digest).collect()
}

fn free_ports(n: usize) -> Vec<String> {
    let listeners: Vec<_> = (0..n).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
    listeners.iter().map(|l| l.local_addr().unwrap().to_string()).collect()
}

fn tcp_digests(dir: &Path) -> Result<Vec<u64>, String> {
    let mut text = fs::read_to_string(configs().join("loopback-tcp.ini")).map_err(|e| e.to_string())?;
    let peers: String = free_ports(3).iter().enumerate().map(|(i, a)| format!("{i} = {a}\n")).collect();
    let at = text.find("[peers]").ok_or("preset lacks [peers]")?;
    text.truncate(at);
    text.push_str("[peers]\n");
    text.push_str(&peers);
    let cfg = dir.join("tcp.ini");
    fs::write(&cfg, text).map_err(|e| e.to_string())?;
    let out = dir.join("traces");
    let kids: Vec<_> = (0..3)
        .map(|lp| {
            Command::new(env!("CARGO_BIN_EXE_stepsim"))
                .args(["--log-level", "warn", "--override", &format!("run.trace_dir={}", out.display())])
                .args(["--override", "net.retry_delay_ms=100", "--override", "net.connect_retries=100"])
                .args(["launch", cfg.to_str().unwrap(), "--lp", &lp.to_string()])
                .stdout(Stdio::null())
                .stderr(Stdio::piped())
                .spawn()
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    for (lp, k) in kids.into_iter().enumerate() {
        let o = k.wait_with_output().map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("lp{lp} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
        }
    }
    let mut combined: Vec<u64> = Vec::new();
    for lp in 0..3 {
        let rows = read_lp_records(&out.join(format!("lp{lp}.csv"))).map_err(|e| e.to_string())?;
        if combined.is_empty() {
            combined = vec![0; rows.len()];
        }
        if rows.len() != combined.len() {
            return Err(format!("lp{lp} wrote {} rows", rows.len()));
        }
        for (c, r) in combined.iter_mut().zip(&rows) {
            *c ^= r.record.partial_digest;
        }
    }
    Ok(combined)
}

fn criterion_1() -> Verdict {
    let base = |lps: u32, mode: &str| {
        let lps = format!("run.num_lps={lps}");
        let mode = format!("heuristics.mode={mode}");
        let c = preset("loopback-tcp.ini", &["run.mode=sim", &lps, &mode]);
        digests(&traces(&c))
    };
    let reference = base(1, "static");
    let mut bad = Vec::new();
    for lps in 1..=3 {
        for mode in ["static", "gaia", "gaia+"] {
            if base(lps, mode) != reference {
                bad.push(format!("{lps}LP/{mode}"));
            }
        }
    }
    let tmp = tempfile::tempdir().unwrap();
    let tcp = match tcp_digests(tmp.path()) {
        Ok(d) if d == reference => "tcp loopback identical".to_string(),
        Ok(d) => {
            let first = d.iter().zip(&reference).position(|(a, b)| a != b);
            bad.push(format!("tcp differs at step {:?}", first.map(|i| i + 1)));
            "tcp loopback differs".to_string()
        }
        Err(e) => {
            bad.push(format!("tcp run failed: {e}"));
            "tcp loopback failed".to_string()
        }
    };
    verdict(
        bad.is_empty(),
        format!("N=1000, 200 steps, 9 sim configurations, {tcp}, final digest {:016x} {bad:?}", reference.last().unwrap()),
    )
}

// 2. Locality on the testbed profile.

fn criterion_2() -> Verdict {
    let run = |mode: &str, theta: Option<f64>| {
        let mut ov = vec![format!("heuristics.mode={mode}"), "model.steps=500".to_string()];
        if let Some(t) = theta {
            ov.push(format!("heuristics.theta={t}"));
        }
        let ov: Vec<&str> = ov.iter().map(String::as_str).collect();
        traces(&preset("testbed-paper.ini", &ov))
    };
    let stat = run("static", None);
    let settled: Vec<f64> = stat.iter().filter(|t| t.step.0 > STATIC_SETTLE_STEPS).filter_map(|t| t.lcr()).collect();
    let static_mean = mean(settled.iter().copied());
    let (lo, hi) = settled.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
    let static_ok = settled.iter().all(|x| (x - STATIC_LCR).abs() <= STATIC_LCR_TOL);

    let gaia = run("gaia", None);
    let gaia_final = gaia.last().and_then(StepTrace::lcr).unwrap_or(0.0);
    let gaia_ok = gaia_final >= GAIA_MIN_FINAL_LCR && gaia_final >= static_mean + GAIA_MIN_GAIN_OVER_STATIC;

    let sweep: Vec<(f64, f64, u64)> = [0.5, 0.6, 0.7]
        .iter()
        .map(|&th| {
            let t = run("gaia", Some(th));
            (th, t.last().and_then(StepTrace::lcr).unwrap_or(0.0), t.iter().map(|s| s.migrations).sum())
        })
        .collect();
    let best = sweep.iter().copied().fold((0.0, f64::MIN, 0), |b, x| if x.1 > b.1 { x } else { b });
    let rows: Vec<String> =
        sweep.iter().map(|(th, l, m)| format!("theta {th}: final lcr {l:.3}, {m} migrations")).collect();
    println!("  theta sweep (N=3000, testbed, 500 steps): {}; best theta {} with {:.3}", rows.join("; "), best.0, best.1);
    verdict(
        static_ok && gaia_ok,
        format!(
            "static lcr after step {STATIC_SETTLE_STEPS} in [{lo:.3}, {hi:.3}] (mean {static_mean:.3}, want {STATIC_LCR:.2}+-{STATIC_LCR_TOL}); gaia final lcr {gaia_final:.3} (want >= {GAIA_MIN_FINAL_LCR} and >= {:.3})",
            static_mean + GAIA_MIN_GAIN_OVER_STATIC
        ),
    )
}

// 3. Interaction counts against the uniform-density expectation.

fn criterion_3() -> Verdict {
    let mut per_step = Vec::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3000u64, 6000, 12000] {
        let c = preset("paper-3000.ini", &[&format!("model.num_mh={n}"), "model.steps=100", "heuristics.mode=static"]);
        let t = traces(&c);
        let m = &c.model;
        let oracle = m.broadcast_fraction * n as f64 * (n - 1) as f64 * std::f64::consts::PI * m.radius * m.radius
            / (m.arena.width * m.arena.height);
        let got = mean(t.iter().map(|s| s.interactions() as f64));
        let err = (got - oracle).abs() / oracle;
        ok &= err <= DENSITY_TOL;
        let worst = t.iter().map(|s| (s.interactions() as f64 - oracle).abs() / oracle).fold(0.0, f64::max);
        parts.push(format!(
            "N={n}: {got:.0}/step vs {oracle:.0} ({:+.2}%, worst single step {:.1}%)",
            100.0 * (got - oracle) / oracle,
            100.0 * worst
        ));
        per_step.push(got);
    }
    let ratio = per_step[2] / per_step[0];
    ok &= (SCALING_RANGE.0..=SCALING_RANGE.1).contains(&ratio);
    verdict(ok, format!("{}; 12000/3000 ratio {ratio:.2} (want {:?})", parts.join(", "), SCALING_RANGE))
}

// 4. Load balancing away from a slow LP.

fn criterion_4() -> Verdict {
    let mut profile = NetProfile::ideal();
    profile.set_cpu_slowdown(LpId(2), 3.0);
    let cfg = HeuristicConfig::with_mode(Mode::GaiaPlus);
    let model = Arc::new(Manet::new(ModelConfig { num_mh: 3000, steps: 500, seed: 1, ..Default::default() }));
    let mut conserved = true;
    let opts = SimOptions { profile, ..Default::default() };
    let out = run_sim(Arc::clone(&model), 3, &cfg, 500, &opts, |_, lps| {
        conserved &= lps[0].directory().counts().iter().map(|&c| c as u64).sum::<u64>() == 3000;
    })
    .expect("run");
    let t = out.traces().unwrap();
    let last = &t.last().unwrap().se_count_per_lp;
    let slow_ok = last[2] <= SLOWED_LP_MAX;

    // LP2 computes as fast as the others but sits behind slow links.
    let mut laggy = NetProfile::ideal();
    let link = LinkSpec { latency_ms: 150.0, jitter_ms: 0.0, bandwidth_mbps: None };
    for o in [0, 1] {
        laggy.set_link(LpId(2), LpId(o), link);
        laggy.set_link(LpId(o), LpId(2), link);
    }
    let small = Arc::new(Manet::new(ModelConfig { num_mh: 3000, steps: 100, seed: 1, ..Default::default() }));
    let opts = SimOptions { profile: laggy, ..Default::default() };
    let out = run_sim(small, 3, &cfg, 100, &opts, |_, _| {}).expect("laggy run");
    let quota = out.records[2].iter().filter_map(|r| r.quota.as_ref().map(|q| q.allowance[2])).max().unwrap_or(0);
    verdict(
        slow_ok && conserved && quota > 0,
        format!(
            "slowdown (1,1,3): final counts {last:?} (want lp2 <= {SLOWED_LP_MAX}), total 3000 at every boundary: {conserved}; laggy lp2 peak outbound quota {quota}"
        ),
    )
}

// 5. Virtual wall-clock time on the testbed profile.

fn criterion_5() -> Verdict {
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 1..=3u64 {
        let w: Vec<f64> = ["static", "gaia", "gaia+"]
            .iter()
            .map(|m| {
                let c = preset(
                    "paper-12000.ini",
                    &[
                        "net.profile=testbed-paper.profile",
                        &format!("heuristics.mode={m}"),
                        &format!("run.global_seed={seed}"),
                        "model.steps=500",
                    ],
                );
                wct_s(&traces(&c))
            })
            .collect();
        let win = w[1] < w[0] && w[2] < w[1];
        wins += win as u32;
        parts.push(format!("seed {seed}: static {:.1}s gaia {:.1}s gaia+ {:.1}s{}", w[0], w[1], w[2], if win { "" } else { " (no)" }));
    }
    verdict(wins >= 2, format!("{} ({wins}/3 ordered)", parts.join("; ")))
}

// 6. Codec.

fn random_frame(r: &mut RngStream) -> Frame {
    let bytes = |r: &mut RngStream, max: usize| -> Vec<u8> {
        let n = (r.next_u64() % (max as u64 + 1)) as usize;
        (0..n).map(|_| r.next_u64() as u8).collect()
    };
    match r.next_u64() % 6 {
        0 => Frame::Hello(HelloBody {
            protocol_version: r.next_u64() as u16,
            lp: LpId(r.next_u64() as u32),
            num_lps: r.next_u64() as u32,
            global_seed: r.next_u64(),
        }),
        1 => Frame::Event(EventBody {
            step: Timestep(r.next_u64()),
            sender: SeId(r.next_u64()),
            seq: r.next_u64() as u32,
            dest: if r.next_u64().is_multiple_of(2) { SeId::BROADCAST } else { SeId(r.next_u64()) },
            payload: bytes(r, MAX_PAYLOAD),
        }),
        2 => Frame::StepDone(StepDoneBody {
            step: Timestep(r.next_u64()),
            sent_count: r.next_u64() as u32,
            busy_nanos: r.next_u64(),
            se_count: r.next_u64() as u32,
        }),
        3 => {
            let from = r.next_u64() as u32;
            Frame::MigrateAnnounce(MigrateAnnounceBody {
                step: Timestep(r.next_u64()),
                se: SeId(r.next_u64()),
                from: LpId(from),
                to: LpId(from.wrapping_add(1 + (r.next_u64() % 7) as u32)),
            })
        }
        4 => Frame::MigrateData(MigrateDataBody { step: Timestep(r.next_u64()), se: SeId(r.next_u64()), state: bytes(r, 300) }),
        _ => Frame::Bye { step: Timestep(r.next_u64()) },
    }
}

fn golden_vectors() -> Result<Vec<(String, Vec<u8>)>, String> {
    let doc = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/protocol.md"))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let mut name = String::new();
    for line in doc.lines() {
        if let Some(n) = line.strip_prefix("### ") {
            name = n.trim().to_string();
        } else if let Some(hex) = line.strip_prefix("hex:") {
            let b = hex
                .split_whitespace()
                .map(|b| u8::from_str_radix(b, 16).map_err(|e| format!("{name}: {e}")))
                .collect::<Result<_, _>>()?;
            out.push((name.clone(), b));
        }
    }
    Ok(out)
}

fn golden_expectation(name: &str) -> Option<Frame> {
    let mut pos = 1234.5f64.to_be_bytes().to_vec();
    pos.extend(250.0f64.to_be_bytes());
    Some(match name {
        "hello" => Frame::Hello(HelloBody { protocol_version: 1, lp: LpId(2), num_lps: 3, global_seed: 0x0123_4567_89ab_cdef }),
        "event-broadcast" => Frame::Event(EventBody { step: Timestep(5), sender: SeId(42), seq: 1, dest: SeId::BROADCAST, payload: pos }),
        "event-unicast-empty" => Frame::Event(EventBody { step: Timestep(7), sender: SeId(3), seq: 0, dest: SeId(9), payload: vec![] }),
        "step-done" => Frame::StepDone(StepDoneBody { step: Timestep(500), sent_count: 1234, busy_nanos: 987_654_321, se_count: 1000 }),
        "migrate-announce" => Frame::MigrateAnnounce(MigrateAnnounceBody { step: Timestep(8), se: SeId(77), from: LpId(0), to: LpId(2) }),
        "migrate-data" => Frame::MigrateData(MigrateDataBody { step: Timestep(9), se: SeId(77), state: vec![1, 2, 3, 4, 5] }),
        "bye-0" => Frame::Bye { step: Timestep(0) },
        "bye-500" => Frame::Bye { step: Timestep(500) },
        _ => return None,
    })
}

fn criterion_6() -> Verdict {
    let mut r = RngStream::from_state(0x5eed);
    let mut round_trip_failures = 0;
    let mut corpus = Vec::with_capacity(1000);
    for i in 0..CODEC_FRAMES {
        let f = random_frame(&mut r);
        let ok = encode_frame(&f).ok().and_then(|b| {
            if i < 1000 {
                corpus.push(b.clone());
            }
            decode_frame(&b).ok()
        }) == Some(f);
        round_trip_failures += !ok as usize;
    }

    let golden = golden_vectors();
    let golden_detail = match &golden {
        Ok(v) => {
            let bad: Vec<&str> = v
                .iter()
                .filter(|(n, b)| golden_expectation(n).is_none_or(|f| decode_frame(b).ok() != Some(f.clone()) || encode_frame(&f).ok().as_ref() != Some(b)))
                .map(|(n, _)| n.as_str())
                .collect();
            if v.len() == 8 && bad.is_empty() { Ok(v.len()) } else { Err(format!("{} vectors, mismatched {bad:?}", v.len())) }
        }
        Err(e) => Err(e.clone()),
    };

    let prev_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut crashes = 0;
    for _ in 0..FUZZ_INPUTS {
        let mut b = corpus[(r.next_u64() % corpus.len() as u64) as usize].clone();
        match r.next_u64() % 4 {
            0 => {
                for _ in 0..1 + r.next_u64() % 4 {
                    let i = (r.next_u64() % b.len() as u64) as usize;
                    b[i] = r.next_u64() as u8;
                }
            }
            1 => b.truncate((r.next_u64() % (b.len() as u64 + 1)) as usize),
            2 => b.extend((0..1 + r.next_u64() % 16).map(|_| r.next_u64() as u8)),
            _ => {
                let i = 5 + (r.next_u64() % (b.len().max(6) as u64 - 5)) as usize;
                if i < b.len() {
                    b[i] ^= 1 << (r.next_u64() % 8);
                }
            }
        }
        crashes += panic::catch_unwind(|| {
            let _ = decode_frame(&b);
        })
        .is_err() as usize;
    }
    panic::set_hook(prev_hook);

    verdict(
        round_trip_failures == 0 && golden_detail.is_ok() && crashes == 0,
        format!(
            "{CODEC_FRAMES} round trips, {round_trip_failures} failures; golden vectors: {}; {FUZZ_INPUTS} mutated inputs, {crashes} crashes",
            match golden_detail {
                Ok(n) => format!("{n} exact"),
                Err(e) => e,
            }
        ),
    )
}

// 7. Invariant suites on small runs.

fn criterion_7() -> Verdict {
    let mut r = RngStream::from_state(7);
    let mut failures: Vec<String> = Vec::new();
    let mut runs = 0;
    for case in 0..12 {
        let n = 150 + r.next_u64() % 351;
        let lps = 2 + (r.next_u64() % 3) as u32;
        let seed = r.next_u64();
        let mode = Mode::ALL[case % 3];
        let delta = [0.05, 0.1, 0.2][(r.next_u64() % 3) as usize];
        let cooldown = 2 + r.next_u64() % 25;
        let interval = 1 + r.next_u64() % 6;
        let cfg = HeuristicConfig {
            symmetric_tolerance: delta,
            cooldown,
            evaluation_interval: interval,
            ..HeuristicConfig::with_mode(mode)
        };
        let mut profile = NetProfile::ideal();
        profile.set_cpu_slowdown(LpId(1), 3.0);
        let model = Arc::new(Manet::new(ModelConfig { num_mh: n, steps: 100, seed, ..Default::default() }));
        let band = Band::symmetric(n, lps, delta);
        let mut owner: Vec<LpId> = Vec::new();
        let mut last_move: Vec<Option<u64>> = vec![None; n as usize];
        let tag = format!("case {case} ({mode}, N={n}, {lps} LPs)");
        let mut local = Vec::new();
        let opts = SimOptions { profile: profile.clone(), ..Default::default() };
        let out = run_sim(Arc::clone(&model), lps, &cfg, 100, &opts, |step, all| {
            let dir = all[0].directory();
            let bytes = dir.to_bytes();
            if all.iter().any(|lp| lp.directory().to_bytes() != bytes) {
                local.push(format!("{tag}: replicas differ at {step}"));
            }
            let counts = dir.counts();
            if counts.iter().map(|&c| c as u64).sum::<u64>() != n {
                local.push(format!("{tag}: counts {counts:?} at {step}"));
            }
            let mut seen = HashSet::new();
            for lp in all {
                for se in lp.resident_ids() {
                    if !seen.insert(se) {
                        local.push(format!("{tag}: {se} resident twice at {step}"));
                    }
                }
            }
            seen.extend(dir.pending().map(|m| m.se));
            if seen.len() as u64 != n {
                local.push(format!("{tag}: {} of {n} entities located at {step}", seen.len()));
            }
            if mode == Mode::Gaia && counts.iter().any(|&c| c < band.floor || c > band.cap) {
                local.push(format!("{tag}: counts {counts:?} outside {band:?} at {step}"));
            }
            let now: Vec<LpId> = (0..n).map(|i| dir.lookup(SeId(i)).unwrap()).collect();
            if !owner.is_empty() {
                for i in 0..n as usize {
                    if now[i] != owner[i] {
                        if let Some(prev) = last_move[i] {
                            if step.0 - prev < cooldown {
                                local.push(format!("{tag}: se{i} moved at {prev} and {}", step.0));
                            }
                        }
                        last_move[i] = Some(step.0);
                    }
                }
            }
            owner = now;
        });
        failures.extend(local);
        let Ok(out) = out else {
            failures.push(format!("{tag}: run aborted"));
            continue;
        };
        let shuffled = SimOptions { profile, order: ArrivalOrder::Shuffled { seed: seed ^ 0xabc }, ..Default::default() };
        let again = run_sim(model, lps, &cfg, 100, &shuffled, |_, _| {}).expect("shuffled run");
        if digests(&out.traces().unwrap()) != digests(&again.traces().unwrap()) {
            failures.push(format!("{tag}: shuffled arrival changed digests"));
        }
        runs += 1;
    }
    verdict(
        failures.is_empty(),
        format!(
            "{runs} runs x 100 steps: conservation, replica equality, gaia band, cooldown, shuffled arrival; {} violations {:?}",
            failures.len(),
            &failures[..failures.len().min(3)]
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Verdict); 7] = [
        ("placement-independent digests", criterion_1),
        ("locality on the testbed profile", criterion_2),
        ("interaction density", criterion_3),
        ("load balancing", criterion_4),
        ("wall-clock ordering", criterion_5),
        ("codec", criterion_6),
        ("invariant suites", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        failed += !v.pass as u32;
        println!(
            "criterion {}: {} {name} [{:.1}s] {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
