//! Built-in microbenchmark corpus with frozen expectations. Each bench
//! replays one measured hardware behavior and reports per-check pass/fail;
//! `run_all` is the executable acceptance suite behind `bench all`.

#![allow(clippy::field_reassign_with_default)]

use crate::config::{DepsMechanism, PrefetchKind, SmConfig};
use crate::deps::{area_report, Mechanism};
use crate::isa::{parse_program, validate_program, LatencyTable, Program, Severity};
use crate::progen::{generate, GenParams};
use crate::sim::{measure_clock_delta, run, RunResult};
use serde_json::Value;

pub const EXPECTATIONS: &str = include_str!("../benchdata/expectations.json");

macro_rules! sass {
    ($name:literal) => {
        include_str!(concat!("../benchdata/", $name, ".sass"))
    };
}

#[derive(Debug, Clone)]
pub struct BenchCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub bench: String,
    pub source: String,
    pub checks: Vec<BenchCheck>,
}

impl BenchOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const BENCH_NAMES: &[&str] = &[
    "rf_conflicts",
    "rf_conflicts_nonop",
    "mem_issue_table",
    "mem_latency_table",
    "cggty_fig_warm",
    "cggty_fig_cold",
    "cggty_fig_stall",
    "cggty_fig_yield",
    "rfc_listing",
    "rfc_pair_holds",
    "deps_fig",
    "const_fl",
    "area",
    "prefetch_sweep",
    "mechanism_equivalence",
    "determinism",
];

pub fn run_all() -> Vec<BenchOutcome> {
    BENCH_NAMES.iter().map(|n| run_bench(n).expect("known bench")).collect()
}

pub fn run_bench(name: &str) -> Result<BenchOutcome, String> {
    match name {
        "rf_conflicts" => Ok(rf_conflicts(false)),
        "rf_conflicts_nonop" => Ok(rf_conflicts(true)),
        "mem_issue_table" => Ok(mem_issue_table()),
        "mem_latency_table" => Ok(mem_latency_table()),
        "cggty_fig_warm" => Ok(cggty_fig_warm()),
        "cggty_fig_cold" => Ok(cggty_fig_cold()),
        "cggty_fig_stall" => Ok(cggty_fig_stall()),
        "cggty_fig_yield" => Ok(cggty_fig_yield()),
        "rfc_listing" => Ok(rfc_listing()),
        "rfc_pair_holds" => Ok(rfc_pair_holds()),
        "deps_fig" => Ok(deps_fig()),
        "const_fl" => Ok(const_fl()),
        "area" => Ok(area_values()),
        "prefetch_sweep" => Ok(prefetch_sweep()),
        "mechanism_equivalence" => Ok(mechanism_equivalence()),
        "determinism" => Ok(determinism()),
        other => Err(format!("unknown bench `{other}`")),
    }
}

fn expectations() -> Value {
    serde_json::from_str(EXPECTATIONS).expect("expectations.json parses")
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> BenchCheck {
    BenchCheck { name: name.into(), pass, detail: detail.into() }
}

fn outcome(bench: &str, source_key: &str, checks: Vec<BenchCheck>) -> BenchOutcome {
    let exp = expectations();
    let source = exp[source_key]["source"].as_str().unwrap_or("").to_string();
    BenchOutcome { bench: bench.to_string(), source, checks }
}

fn prog(text: &str) -> Program {
    parse_program(text).expect("bench program parses")
}

/// Single warp on an otherwise idle SM, instruction fetch ideal.
fn probe_config() -> SmConfig {
    let mut cfg = SmConfig::default();
    cfg.warps = 1;
    cfg.perfect_icache = true;
    cfg
}

fn lint_clean(p: &Program) -> bool {
    validate_program(p, &LatencyTable::builtin())
        .iter()
        .all(|d| d.severity != Severity::Error)
}

fn issue_cycle(r: &RunResult, warp: usize, pc: u64) -> Option<u64> {
    r.issue_trace(warp).into_iter().find(|(p, _)| *p == pc).map(|(_, c)| c)
}

// ----- register-file conflicts -----

fn rf_conflicts(nonop: bool) -> BenchOutcome {
    let (key, programs) = if nonop {
        (
            "rf_conflicts_nonop",
            vec![
                ("odd_odd", sass!("rf_conflict_odd_odd_nonop")),
                ("even_odd", sass!("rf_conflict_even_odd_nonop")),
                ("even_even", sass!("rf_conflict_even_even_nonop")),
            ],
        )
    } else {
        (
            "rf_conflicts",
            vec![
                ("odd_odd", sass!("rf_conflict_odd_odd")),
                ("even_odd", sass!("rf_conflict_even_odd")),
                ("even_even", sass!("rf_conflict_even_even")),
            ],
        )
    };
    let exp = expectations();
    let mut checks = Vec::new();
    for (variant, text) in programs {
        let p = prog(text);
        checks.push(check(format!("{variant} lints clean"), lint_clean(&p), ""));
        let expected = exp[key]["deltas"][variant].as_i64().unwrap();
        match run(&p, &probe_config()) {
            Ok(result) => {
                let delta = measure_clock_delta(&result, 0, 0, 1).unwrap_or(-1);
                checks.push(check(
                    format!("{variant} clock delta"),
                    delta == expected,
                    format!("measured {delta}, expected {expected}"),
                ));
            }
            Err(e) => checks.push(check(format!("{variant} runs"), false, e.to_string())),
        }
    }
    outcome(key, key, checks)
}

// ----- memory issue-cycle table -----

fn independent_loads(n: usize) -> Program {
    let mut text = String::from(".base 0x0\n");
    for i in 0..n {
        text.push_str(&format!("[B------:R-:W-:Y0:S00] LDG.E.32 R{}, [R2] ;\n", 10 + i));
    }
    text.push_str("[B------:R-:W-:Y0:S00] EXIT ;\n");
    prog(&text)
}

fn mem_issue_table() -> BenchOutcome {
    let exp = expectations();
    let program = independent_loads(16);
    let mut checks = vec![check("program lints clean", lint_clean(&program), "")];
    for active in 1..=4usize {
        let mut cfg = SmConfig::default();
        cfg.warps = active;
        cfg.perfect_icache = true;
        let expected = &exp["mem_issue_table"]["columns"][active.to_string()];
        match run(&program, &cfg) {
            Ok(result) => {
                for i in 0..16usize {
                    let pc = 16 * i as u64;
                    let mut cycles: Vec<u64> =
                        (0..active).filter_map(|w| issue_cycle(&result, w, pc)).collect();
                    cycles.sort_unstable();
                    let want: Vec<u64> = expected[i]
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|v| v.as_u64().unwrap())
                        .collect();
                    checks.push(check(
                        format!("{active} active, instruction {}", i + 1),
                        cycles == want,
                        format!("measured {cycles:?}, expected {want:?}"),
                    ));
                }
            }
            Err(e) => checks.push(check(format!("{active} active runs"), false, e.to_string())),
        }
    }
    outcome("mem_issue_table", "mem_issue_table", checks)
}

// ----- latency-table contract -----

struct ProbeRow {
    name: String,
    producer: String,
    overwriter: String,
    consumer: Option<String>,
    war: u64,
    raw: Option<u64>,
}

fn latency_probe_rows() -> Vec<ProbeRow> {
    use crate::isa::{AddrClass, MemKind, MemSpace};
    let mut rows = Vec::new();
    for (kind, space, width, addr, lat) in LatencyTable::builtin().rows() {
        let width_suffix = format!(".{width}");
        let addr_reg = match addr {
            AddrClass::Uniform => "UR2",
            _ => "R2",
        };
        let name = format!("{kind:?}.{space:?}.{width}.{addr:?}").to_lowercase();
        let (producer, overwriter, consumer) = match (kind, space) {
            (MemKind::Load, MemSpace::Constant) => {
                let (cref, over) = match addr {
                    AddrClass::Immediate => ("c[0x0][0x40]".to_string(), "MOV R9, R10".to_string()),
                    _ => ("c[0x0][R2]".to_string(), "MOV R2, R10".to_string()),
                };
                (
                    format!("[B------:R0:W1:Y0:S02] LDC{width_suffix} R4, {cref} ;"),
                    format!("[B0-----:R-:W-:Y0:S00] {over} ;"),
                    Some("[B-1----:R-:W-:Y0:S00] MOV R20, R21 ;".to_string()),
                )
            }
            (MemKind::Load, _) => {
                let op = if space == MemSpace::Global { "LDG.E" } else { "LDS" };
                (
                    format!("[B------:R0:W1:Y0:S02] {op}{width_suffix} R4, [{addr_reg}] ;"),
                    format!("[B0-----:R-:W-:Y0:S00] MOV {addr_reg}, R10 ;"),
                    Some("[B-1----:R-:W-:Y0:S00] IADD3 R20, R4, R4, R4 ;".to_string()),
                )
            }
            (MemKind::Store, _) => {
                let op = if space == MemSpace::Global { "STG.E" } else { "STS" };
                (
                    format!("[B------:R0:W-:Y0:S02] {op}{width_suffix} [{addr_reg}], R4 ;"),
                    "[B0-----:R-:W-:Y0:S00] MOV R4, R10 ;".to_string(),
                    None,
                )
            }
            (MemKind::Ldgsts, _) => (
                format!("[B------:R0:W1:Y0:S02] LDGSTS.E{width_suffix} [R4], [R2] ;"),
                "[B0-----:R-:W-:Y0:S00] MOV R2, R10 ;".to_string(),
                Some("[B-1----:R-:W-:Y0:S00] MOV R20, R21 ;".to_string()),
            ),
        };
        rows.push(ProbeRow {
            name,
            producer,
            overwriter,
            consumer,
            war: lat.war_release as u64,
            raw: lat.raw_waw_release.map(|r| r as u64),
        });
    }
    rows
}

fn mem_latency_table() -> BenchOutcome {
    let mut checks = Vec::new();
    let cfg = probe_config();
    for row in latency_probe_rows() {
        let war_prog = prog(&format!(
            ".base 0x0\n{}\n{}\n[B------:R-:W-:Y0:S00] EXIT ;\n",
            row.producer, row.overwriter
        ));
        if !lint_clean(&war_prog) {
            checks.push(check(format!("{} war probe lints", row.name), false, ""));
            continue;
        }
        match run(&war_prog, &cfg) {
            Ok(r) => {
                let t0 = issue_cycle(&r, 0, 0).unwrap_or(0);
                let t1 = issue_cycle(&r, 0, 16).unwrap_or(0);
                checks.push(check(
                    format!("{} WAR", row.name),
                    t1 == t0 + row.war,
                    format!("overwriter at +{}, expected +{}", t1 - t0, row.war),
                ));
            }
            Err(e) => checks.push(check(format!("{} war probe", row.name), false, e.to_string())),
        }
        if let (Some(consumer), Some(raw)) = (&row.consumer, row.raw) {
            let raw_prog = prog(&format!(
                ".base 0x0\n{}\n{}\n[B------:R-:W-:Y0:S00] EXIT ;\n",
                row.producer, consumer
            ));
            match run(&raw_prog, &cfg) {
                Ok(r) => {
                    let t0 = issue_cycle(&r, 0, 0).unwrap_or(0);
                    let t1 = issue_cycle(&r, 0, 16).unwrap_or(0);
                    checks.push(check(
                        format!("{} RAW", row.name),
                        t1 == t0 + raw,
                        format!("consumer at +{}, expected +{}", t1 - t0, raw),
                    ));
                }
                Err(e) => {
                    checks.push(check(format!("{} raw probe", row.name), false, e.to_string()))
                }
            }
        }
    }
    outcome("mem_latency_table", "mem_latency_table", checks)
}

// ----- issue-scheduler timelines -----

/// Four-warp timeline program: an optional NOP+BAR warm-up that lets every
/// instruction buffer fill before the measured region, then `n` independent
/// single-cycle instructions, the second of which may carry control bits.
pub fn timeline_program(n: usize, warmup: bool, second_stall: u8, second_yield: bool) -> Program {
    let mut text = String::from(".base 0x0\n");
    if warmup {
        text.push_str("[B------:R-:W-:Y0:S00] NOP ;\n");
        text.push_str("[B------:R-:W-:Y0:S02] BAR ;\n");
    }
    for i in 0..n {
        let (stall, y) = if i == 1 { (second_stall, second_yield) } else { (0, false) };
        text.push_str(&format!(
            "[B------:R-:W-:Y{}:S{:02}] MOV R{}, 0x{:x} ;\n",
            u8::from(y),
            stall,
            100 + (i % 64),
            i
        ));
    }
    text.push_str("[B------:R-:W-:Y0:S00] EXIT ;\n");
    prog(&text)
}

fn timeline_config(warps: usize, perfect: bool) -> SmConfig {
    let mut cfg = SmConfig::default();
    cfg.sub_cores = 1;
    cfg.warps = warps;
    cfg.perfect_icache = perfect;
    cfg
}

/// Measured-region issue order as (warp, instruction index) pairs; the
/// region holds `count` instructions starting at `measured_base`.
fn measured_order(r: &RunResult, measured_base: u64, count: usize) -> Vec<(usize, usize)> {
    let end = measured_base + 16 * count as u64;
    r.issue_order(0)
        .into_iter()
        .filter(|(_, pc, _)| *pc >= measured_base && *pc < end)
        .map(|(w, pc, _)| (w, ((pc - measured_base) / 16) as usize))
        .collect()
}

/// Split an order into contiguous per-warp segments.
fn segments(order: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut segs: Vec<(usize, usize)> = Vec::new();
    for (w, _) in order {
        match segs.last_mut() {
            Some((sw, count)) if sw == w => *count += 1,
            _ => segs.push((*w, 1)),
        }
    }
    segs
}

fn cggty_fig_warm() -> BenchOutcome {
    let program = timeline_program(32, true, 0, false);
    let r = run(&program, &timeline_config(4, true)).expect("run");
    let order = measured_order(&r, 0x20, 32);
    let segs = segments(&order);
    let want = vec![(3usize, 32usize), (2, 32), (1, 32), (0, 32)];
    let checks = vec![
        check("program lints clean", lint_clean(&program), ""),
        check(
            "issue order is W3, W2, W1, W0, each run to completion",
            segs == want,
            format!("segments {segs:?}"),
        ),
    ];
    outcome("cggty_fig_warm", "cggty", checks)
}

fn cggty_fig_cold() -> BenchOutcome {
    let program = timeline_program(32, false, 0, false);
    let mut cfg = timeline_config(4, false);
    cfg.prefetch_kind = PrefetchKind::Stream;
    let r = run(&program, &cfg).expect("run");
    let order = measured_order(&r, 0x0, 32);
    let segs = segments(&order);
    // W3 issues a proper prefix, W2 runs start to finish, W3 resumes and
    // finishes, then W1 and W0 run complete.
    let pass = match segs.as_slice() {
        [(3, k), (2, 32), (3, rest), (1, 32), (0, 32)] => *k >= 1 && *k < 32 && k + rest == 32,
        _ => false,
    };
    let checks = vec![check(
        "cold-start order is a W3 prefix, W2 in full, the W3 remainder, then W1 and W0",
        pass,
        format!("segments {segs:?}"),
    )];
    outcome("cggty_fig_cold", "cggty", checks)
}

fn cggty_fig_stall() -> BenchOutcome {
    let exp = expectations();
    let program = timeline_program(32, true, 4, false);
    let r = run(&program, &timeline_config(4, true)).expect("run");
    let order = measured_order(&r, 0x20, 32);
    let prefix: Vec<usize> = order.iter().take(7).map(|(w, _)| *w).collect();
    let mut checks = vec![
        check(
            "stalled warps rotate W3 W3 W2 W2 W1 W1 then return to W3",
            prefix == vec![3, 3, 2, 2, 1, 1, 3],
            format!("prefix {prefix:?}"),
        ),
    ];
    // W0 runs last and alone; its stall produces exactly four empty slots.
    let t_i2 = issue_cycle(&r, 0, 0x30).unwrap_or(0);
    let t_i3 = issue_cycle(&r, 0, 0x40).unwrap_or(0);
    let want = exp["cggty"]["fig_b_bubbles_alone"].as_u64().unwrap();
    checks.push(check(
        "four bubbles after the stalled instruction of the last warp",
        t_i3 - t_i2 == want + 1,
        format!("gap {} cycles, expected {}", t_i3 - t_i2, want + 1),
    ));
    outcome("cggty_fig_stall", "cggty", checks)
}

fn cggty_fig_yield() -> BenchOutcome {
    let exp = expectations();
    let program = timeline_program(32, true, 0, true);
    let r = run(&program, &timeline_config(4, true)).expect("run");
    let order = measured_order(&r, 0x20, 32);
    let prefix: Vec<usize> = order.iter().take(5).map(|(w, _)| *w).collect();
    let mut checks = vec![check(
        "yield switches to the youngest other warp and back",
        prefix == vec![3, 3, 2, 2, 3],
        format!("prefix {prefix:?}"),
    )];
    let solo = run(&program, &timeline_config(1, true)).expect("run");
    let t_i2 = issue_cycle(&solo, 0, 0x30).unwrap_or(0);
    let t_i3 = issue_cycle(&solo, 0, 0x40).unwrap_or(0);
    let want = exp["cggty"]["fig_c_bubbles_alone"].as_u64().unwrap();
    checks.push(check(
        "yield alone produces exactly one bubble",
        t_i3 - t_i2 == want + 1,
        format!("gap {} cycles, expected {}", t_i3 - t_i2, want + 1),
    ));
    outcome("cggty_fig_yield", "cggty", checks)
}

// ----- register file cache -----

fn rfc_events(r: &RunResult) -> Vec<(u64, u8, bool)> {
    r.events
        .iter()
        .filter(|e| e.stage == "rfc_hit" || e.stage == "rfc_miss")
        .map(|e| {
            let reg: u8 = e
                .detail
                .trim_start_matches('R')
                .split_whitespace()
                .next()
                .and_then(|s| s.parse().ok())
                .unwrap_or(255);
            (e.pc.unwrap_or(0), reg, e.stage == "rfc_hit")
        })
        .collect()
}

fn rfc_listing() -> BenchOutcome {
    let exp = expectations();
    let mut checks = Vec::new();
    for (name, text) in [
        ("rfc_ex1", sass!("rfc_ex1")),
        ("rfc_ex2", sass!("rfc_ex2")),
        ("rfc_ex3", sass!("rfc_ex3")),
        ("rfc_ex4", sass!("rfc_ex4")),
    ] {
        let p = prog(text);
        let r = run(&p, &probe_config()).expect("run");
        let got = rfc_events(&r);
        let want: Vec<(u64, u8, bool)> = exp["rfc_listing"]["sequences"][name]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| {
                (
                    v["pc"].as_u64().unwrap(),
                    v["reg"].as_u64().unwrap() as u8,
                    v["hit"].as_bool().unwrap(),
                )
            })
            .collect();
        checks.push(check(
            format!("{name} hit/miss sequence"),
            got == want,
            format!("got {got:?}"),
        ));
    }
    outcome("rfc_listing", "rfc_listing", checks)
}

fn holds_at(r: &RunResult, pc: u64) -> u64 {
    r.events.iter().filter(|e| e.stage == "allocate_hold" && e.pc == Some(pc)).count() as u64
}

fn rfc_pair_holds() -> BenchOutcome {
    let exp = expectations();
    let mut checks = Vec::new();
    let fmul = run(&prog(sass!("rfc_pair_fmul")), &probe_config()).expect("run");
    let ffma = run(&prog(sass!("rfc_pair_ffma")), &probe_config()).expect("run");
    let want_fmul = exp["rfc_pair_holds"]["fmul_second_holds"].as_u64().unwrap();
    let want_ffma = exp["rfc_pair_holds"]["ffma_second_holds"].as_u64().unwrap();
    checks.push(check(
        "first FMUL never holds",
        holds_at(&fmul, 0x0) == 0,
        format!("{} holds", holds_at(&fmul, 0x0)),
    ));
    checks.push(check(
        "second same-bank FMUL holds one cycle",
        holds_at(&fmul, 0x10) == want_fmul,
        format!("{} holds, expected {want_fmul}", holds_at(&fmul, 0x10)),
    ));
    checks.push(check(
        "second same-bank FFMA holds two cycles",
        holds_at(&ffma, 0x10) == want_ffma,
        format!("{} holds, expected {want_ffma}", holds_at(&ffma, 0x10)),
    ));
    outcome("rfc_pair_holds", "rfc_pair_holds", checks)
}

// ----- dependence counters -----

fn deps_fig() -> BenchOutcome {
    let exp = expectations();
    let program = prog(sass!("deps_fig"));
    let mut checks = vec![check("program lints clean", lint_clean(&program), "")];
    let r = run(&program, &probe_config()).expect("run");
    let t_load2 = issue_cycle(&r, 0, 0x60).unwrap_or(0);
    let t_add = issue_cycle(&r, 0, 0x80).unwrap_or(0);
    let want_gap = exp["deps_fig"]["adder_issue_after_second_load"].as_u64().unwrap();
    checks.push(check(
        "adder issues once the last SB3 write-back lands",
        t_add == t_load2 + want_gap,
        format!("adder at +{}, expected +{want_gap}", t_add - t_load2),
    ));
    let sb3_peak = r
        .events
        .iter()
        .filter(|e| e.stage == "counter_inc" && e.detail.starts_with("SB3="))
        .filter_map(|e| e.detail.trim_start_matches("SB3=").parse::<u64>().ok())
        .max()
        .unwrap_or(0);
    checks.push(check(
        "SB3 reaches two with both loads in flight",
        sb3_peak == exp["deps_fig"]["sb3_peak"].as_u64().unwrap(),
        format!("peak {sb3_peak}"),
    ));
    let sb3_decs: Vec<u64> = r
        .events
        .iter()
        .filter(|e| e.stage == "counter_dec" && e.detail.starts_with("SB3="))
        .map(|e| e.cycle)
        .collect();
    checks.push(check(
        "adder issues only after both SB3 decrements",
        sb3_decs.len() == 2 && sb3_decs.iter().all(|c| *c < t_add),
        format!("decrements at {sb3_decs:?}, adder at {t_add}"),
    ));
    let sb0_last_dec = r
        .events
        .iter()
        .filter(|e| e.stage == "counter_dec" && e.detail.starts_with("SB0="))
        .map(|e| e.cycle)
        .max()
        .unwrap_or(u64::MAX);
    let wide_load_commit = r
        .events
        .iter()
        .filter(|e| e.stage == "commit" && e.pc == Some(0x70))
        .map(|e| e.cycle)
        .min()
        .unwrap_or(0);
    checks.push(check(
        "source reads release SB0 strictly before the wide load writes back",
        sb0_last_dec < wide_load_commit,
        format!("last SB0 release {sb0_last_dec}, write-back {wide_load_commit}"),
    ));
    checks.push(check("run emits no hazard diagnostics", r.diagnostics.is_empty(), ""));

    // Zeroing the stall of the load directly ahead of the adder exposes
    // the one-cycle visibility window of counter increments.
    let broken = prog(&sass!("deps_fig").replace(":Y0:S02]", ":Y0:S00]"));
    let diags = validate_program(&broken, &LatencyTable::builtin());
    checks.push(check(
        "distance-one producer with stall < 2 is rejected by the linter",
        diags.iter().any(|d| d.kind == "distance1_visibility"),
        format!("{} diagnostics", diags.len()),
    ));
    outcome("deps_fig", "deps_fig", checks)
}

// ----- constant caches -----

fn const_fl() -> BenchOutcome {
    let exp = expectations();
    let delay = exp["const_fl"]["miss_delay"].as_u64().unwrap();
    let ldc_raw = exp["const_fl"]["ldc_raw"].as_u64().unwrap();
    let mut checks = Vec::new();

    let cold = run(&prog(sass!("const_fl_cold")), &probe_config()).expect("run");
    let t0 = issue_cycle(&cold, 0, 0x0).unwrap_or(0);
    let t1 = issue_cycle(&cold, 0, 0x10).unwrap_or(0);
    checks.push(check(
        "first constant use is delayed by the full miss",
        t0 == 2 + delay,
        format!("issued at {t0}, expected {}", 2 + delay),
    ));
    checks.push(check(
        "second use of the resident address has no delay",
        t1 == t0 + 1,
        format!("issued at {t1}"),
    ));

    let disjoint = run(&prog(sass!("const_fl_vl_disjoint")), &probe_config()).expect("run");
    let t_ldc = issue_cycle(&disjoint, 0, 0x0).unwrap_or(0);
    let t_ffma = issue_cycle(&disjoint, 0, 0x10).unwrap_or(0);
    checks.push(check(
        "LDC residency does not warm the fixed-latency path",
        t_ffma == t_ldc + ldc_raw + delay,
        format!("issued at +{}, expected +{}", t_ffma - t_ldc, ldc_raw + delay),
    ));
    outcome("const_fl", "const_fl", checks)
}

// ----- area arithmetic -----

fn area_values() -> BenchOutcome {
    let exp = expectations();
    let rf = 256 * 1024;
    let cb48 = area_report(Mechanism::ControlBits, 48, rf);
    let sb48 = area_report(Mechanism::Scoreboard { max_consumers: Some(63) }, 48, rf);
    let sb64 = area_report(Mechanism::Scoreboard { max_consumers: Some(63) }, 64, rf);
    let cb64 = area_report(Mechanism::ControlBits, 64, rf);
    let e = &exp["area"];
    let checks = vec![
        check(
            "control bits, 48 warps",
            cb48.bits_per_warp == e["control_bits_48"]["bits_per_warp"].as_u64().unwrap()
                && cb48.bits_per_sm == e["control_bits_48"]["bits_per_sm"].as_u64().unwrap()
                && cb48.overhead_pct == e["control_bits_48"]["overhead_pct"].as_f64(),
            format!("{cb48:?}"),
        ),
        check(
            "scoreboard-63, 48 warps",
            sb48.bits_per_warp == e["scoreboard63_48"]["bits_per_warp"].as_u64().unwrap()
                && sb48.bits_per_sm == e["scoreboard63_48"]["bits_per_sm"].as_u64().unwrap()
                && sb48.overhead_pct == e["scoreboard63_48"]["overhead_pct"].as_f64(),
            format!("{sb48:?}"),
        ),
        check(
            "scoreboard-63, 64 warps",
            sb64.overhead_pct == e["scoreboard63_64"]["overhead_pct"].as_f64(),
            format!("{sb64:?}"),
        ),
        check(
            "control bits, 64 warps",
            cb64.overhead_pct == e["control_bits_64"]["overhead_pct"].as_f64(),
            format!("{cb64:?}"),
        ),
    ];
    outcome("area", "area", checks)
}

// ----- instruction prefetching -----

pub fn straightline(n: usize) -> Program {
    let mut text = String::from(".base 0x0\n");
    for i in 0..n {
        text.push_str(&format!("[B------:R-:W-:Y0:S00] MOV R{}, 0x{:x} ;\n", 100 + (i % 64), i));
    }
    text.push_str("[B------:R-:W-:Y0:S00] EXIT ;\n");
    prog(&text)
}

fn prefetch_sweep() -> BenchOutcome {
    let program = straightline(512);
    let mut cfg = SmConfig::default();
    cfg.warps = 4;
    let depths = ["none", "1", "2", "4", "8", "16"];
    let mut cycles = Vec::new();
    let mut checks = Vec::new();
    for d in depths {
        let mut c = cfg.clone();
        crate::sim::apply_axis(&mut c, "prefetch.depth", d).unwrap();
        let r = run(&program, &c).expect("run");
        cycles.push((d, r.stats.total_cycles));
    }
    let nonincreasing = cycles.windows(2).all(|w| w[1].1 <= w[0].1);
    checks.push(check(
        "total cycles never increase from no prefetch through depth 16",
        nonincreasing,
        format!("{cycles:?}"),
    ));
    let mut perfect_cfg = cfg.clone();
    crate::sim::apply_axis(&mut perfect_cfg, "prefetch.depth", "perfect").unwrap();
    let perfect = run(&program, &perfect_cfg).expect("run").stats.total_cycles;
    let stream16 = cycles.last().unwrap().1;
    checks.push(check(
        "a perfect instruction cache is at least as fast as a depth-16 stream",
        perfect <= stream16,
        format!("perfect {perfect}, stream-16 {stream16}"),
    ));
    outcome("prefetch_sweep", "cggty", checks)
}

// ----- mechanism equivalence -----

fn mechanism_equivalence() -> BenchOutcome {
    let exp = expectations();
    let count = exp["equivalence"]["programs"].as_u64().unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for seed in 1..=count {
        let program = generate(&GenParams { seed, len: 36, memory_pct: 35, reuse: false });
        let errs: Vec<_> = validate_program(&program, &LatencyTable::builtin())
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if !errs.is_empty() {
            pass = false;
            detail = format!("seed {seed}: generator produced lint errors {errs:?}");
            break;
        }
        let mut cb_cfg = SmConfig::default();
        cb_cfg.warps = 2;
        cb_cfg.perfect_icache = true;
        let mut sb_cfg = cb_cfg.clone();
        sb_cfg.deps_mechanism = DepsMechanism::Scoreboard;
        let cb = match run(&program, &cb_cfg) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                detail = format!("seed {seed}: counter-mode fault {e}");
                break;
            }
        };
        let sb = match run(&program, &sb_cfg) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                detail = format!("seed {seed}: scoreboard-mode fault {e}");
                break;
            }
        };
        if !cb.diagnostics.is_empty() {
            pass = false;
            detail = format!("seed {seed}: hazard monitor fired {:?}", cb.diagnostics);
            break;
        }
        if cb.registers != sb.registers {
            pass = false;
            detail = format!("seed {seed}: final register state differs");
            break;
        }
    }
    let checks = vec![check(
        format!("{count} generated programs agree across mechanisms"),
        pass,
        detail,
    )];
    outcome("mechanism_equivalence", "equivalence", checks)
}

// ----- determinism -----

fn determinism() -> BenchOutcome {
    let mut checks = Vec::new();
    let cold_cfg = {
        let mut c = timeline_config(4, false);
        c.prefetch_kind = PrefetchKind::Stream;
        c
    };
    let cases: Vec<(&str, Program, SmConfig)> = vec![
        ("clock probe", prog(sass!("rf_conflict_odd_odd")), probe_config()),
        ("counter walkthrough", prog(sass!("deps_fig")), probe_config()),
        ("cold fetch timeline", timeline_program(32, false, 0, false), cold_cfg),
        (
            "generated mixed kernel",
            generate(&GenParams { seed: 3, len: 40, memory_pct: 40, reuse: false }),
            {
                let mut c = SmConfig::default();
                c.warps = 4;
                c.perfect_icache = true;
                c
            },
        ),
    ];
    for (name, program, cfg) in cases {
        let mut blobs = Vec::new();
        for _ in 0..3 {
            let r = run(&program, &cfg).expect("run");
            blobs.push(serde_json::to_string(&r).expect("serialize"));
        }
        let identical = blobs.windows(2).all(|w| w[0] == w[1]);
        checks.push(check(
            format!("{name}: three repeated runs serialize to identical bytes"),
            identical,
            format!("{} bytes", blobs[0].len()),
        ));
    }
    outcome("determinism", "equivalence", checks)
}
