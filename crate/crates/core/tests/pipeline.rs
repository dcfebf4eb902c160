//! Integration tests for pipeline behaviors beyond the acceptance corpus:
//! scheduler invariants, hazard-monitor semantics, functional dataflow,
//! and configuration sensitivity.

use warpsim_core::bench::straightline;
use warpsim_core::config::UnitWidth;
use warpsim_core::regfile::LANES;
use warpsim_core::{
    parse_program, run, run_with_init, sweep, DepsMechanism, PrefetchKind, Program, RegInit,
    RunResult, SmConfig,
};

fn prog(text: &str) -> Program {
    parse_program(text).unwrap()
}

fn probe_cfg() -> SmConfig {
    let mut cfg = SmConfig::default();
    cfg.warps = 1;
    cfg.perfect_icache = true;
    cfg
}

fn lanes(v: u32) -> [u32; LANES] {
    [v; LANES]
}

#[test]
fn one_issue_per_subcore_per_cycle() {
    let mut cfg = SmConfig::default();
    cfg.sub_cores = 1;
    cfg.warps = 4;
    cfg.perfect_icache = true;
    let r = run(&straightline(64), &cfg).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for e in r.events.iter().filter(|e| e.stage == "issue") {
        assert!(seen.insert((e.subcore, e.cycle)), "double issue at cycle {}", e.cycle);
    }
}

#[test]
fn greedy_dominance_no_unforced_switches() {
    let mut cfg = SmConfig::default();
    cfg.sub_cores = 1;
    cfg.warps = 4;
    cfg.perfect_icache = true;
    let r = run(&straightline(48), &cfg).unwrap();
    // A warp that issued at t and is still eligible issues at t + 1, so
    // with stall-free programs each warp's run is one contiguous block.
    let order = r.issue_order(0);
    let mut seen_done: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
    let mut current = None;
    for (w, _, _) in order {
        if current != Some(w) {
            if let Some(c) = current {
                seen_done.insert(c);
            }
            assert!(!seen_done.contains(&w), "warp {w} issued in two separate blocks");
            current = Some(w);
        }
    }
}

#[test]
fn read_port_discipline_over_a_run() {
    // Port-heavy kernel: every FFMA wants three same-bank operands.
    let mut text = String::from(".base 0x0\n");
    for i in 0..32 {
        text.push_str(&format!("[B------:R-:W-:Y0:S00] FFMA R{}, R2, R4, R6 ;\n", 100 + i));
    }
    text.push_str("EXIT ;\n");
    let r = run(&prog(&text), &probe_cfg()).unwrap();
    let mut used: std::collections::BTreeMap<(u8, u64), usize> = std::collections::BTreeMap::new();
    for e in r.events.iter().filter(|e| e.stage == "allocate") {
        let d = e.detail.trim_matches(|c| c == '[' || c == ']');
        if d.is_empty() {
            continue;
        }
        for pair in d.split("), ") {
            let pair = pair.trim_matches(|c| c == '(' || c == ')');
            let mut it = pair.split(", ");
            let bank: u8 = it.next().unwrap().parse().unwrap();
            let cycle: u64 = it.next().unwrap().parse().unwrap();
            *used.entry((bank, cycle)).or_default() += 1;
        }
    }
    assert!(!used.is_empty());
    assert!(used.values().all(|n| *n <= 1), "a bank port was double-booked");
}

#[test]
fn stale_value_semantics_and_single_raw_diagnostic() {
    // Uncovered FFMA -> FADD pair: the consumer reads the pre-update value
    // and the monitor reports exactly one RAW violation.
    let text = "\
[B------:R-:W-:Y0:S00] FFMA R5, R2, R3, R4 ;
[B------:R-:W-:Y0:S00] FADD R6, R5, R7 ;
EXIT ;\n";
    let init = vec![
        RegInit::Regular { warp: 0, index: 2, lanes: lanes(2.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 3, lanes: lanes(3.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 4, lanes: lanes(1.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 7, lanes: lanes(1.0f32.to_bits()) },
    ];
    let broken = run_with_init(&prog(text), &probe_cfg(), &init).unwrap();
    let raws: Vec<_> =
        broken.diagnostics.iter().filter(|d| d.kind == "raw_violation").collect();
    assert_eq!(raws.len(), 1, "{:?}", broken.diagnostics);
    let r6 = broken.registers[0].regular.get(&6).unwrap();
    assert_eq!(f32::from_bits(r6[0]), 1.0, "consumer saw the stale zero in R5");

    // The independent oracle: scoreboard mode blocks until the write lands
    // and must produce a different final value.
    let mut sb_cfg = probe_cfg();
    sb_cfg.deps_mechanism = DepsMechanism::Scoreboard;
    let fixed = run_with_init(&prog(text), &sb_cfg, &init).unwrap();
    let r6 = fixed.registers[0].regular.get(&6).unwrap();
    assert_eq!(f32::from_bits(r6[0]), 8.0);
    assert_ne!(broken.registers, fixed.registers);

    // Covering the latency silences the monitor and fixes the value.
    let covered = text.replace(":Y0:S00] FFMA", ":Y0:S04] FFMA");
    let good = run_with_init(&prog(&covered), &probe_cfg(), &init).unwrap();
    assert!(good.diagnostics.is_empty());
    assert_eq!(good.registers, fixed.registers);
}

#[test]
fn counter_increment_invisible_one_cycle() {
    // A distance-1 masked consumer with stall 0 issues before the
    // increment is visible; the monitor catches the early read.
    let text = "\
[B------:R-:W0:Y0:S00] LDG.E.32 R6, [R2] ;
[B0-----:R-:W-:Y0:S00] IADD3 R8, R6, R7, R9 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    assert!(
        r.diagnostics.iter().any(|d| d.kind == "raw_violation"),
        "stale counter read must surface as a hazard"
    );
    let t0 = r.issue_trace(0)[0].1;
    let t1 = r.issue_trace(0)[1].1;
    assert_eq!(t1, t0 + 1, "the consumer slipped past the invisible increment");

    let covered = text.replace(":Y0:S00] LDG", ":Y0:S02] LDG");
    let r = run(&prog(&covered), &probe_cfg()).unwrap();
    assert!(r.diagnostics.is_empty());
    let t0 = r.issue_trace(0)[0].1;
    let t1 = r.issue_trace(0)[1].1;
    assert_eq!(t1, t0 + 32, "with stall 2 the consumer waits for the release");
}

#[test]
fn counter_conservation_over_a_run() {
    let text = "\
.base 0x50
[B------:R-:W3:Y0:S00] LDG.E.32 R4, [R6] ;
[B------:R0:W3:Y0:S00] LDG.E.32 R5, [R2] ;
[B------:R0:W4:Y0:S02] LDG.E.64 R8, [R2] ;
[B0--3--:R-:W-:Y0:S00] IADD3 R2, R4, R5, R30 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    for sb in 0..6 {
        let incs = r
            .events
            .iter()
            .filter(|e| e.stage == "counter_inc" && e.detail.starts_with(&format!("SB{sb}=")))
            .count();
        let decs = r
            .events
            .iter()
            .filter(|e| e.stage == "counter_dec" && e.detail.starts_with(&format!("SB{sb}=")))
            .count();
        assert_eq!(incs, decs, "SB{sb} increments and decrements must balance");
    }
}

#[test]
fn accounting_closes_per_subcore() {
    let mut cfg = SmConfig::default();
    cfg.warps = 4;
    cfg.perfect_icache = true;
    let r = run(&straightline(64), &cfg).unwrap();
    for sc in &r.stats.per_subcore {
        assert_eq!(sc.issued + sc.bubbles, r.stats.total_cycles);
    }
}

#[test]
fn shared_memory_store_load_round_trip() {
    let text = "\
[B------:R-:W-:Y0:S04] MOV R2, 0x200 ;
[B------:R-:W-:Y0:S04] MOV R4, 0x2a ;
[B------:R0:W-:Y0:S02] STS.32 [R2], R4 ;
[B0-----:R-:W1:Y0:S02] LDS.32 R6, [R2] ;
[B-1----:R-:W-:Y0:S00] IADD3 R8, R6, R30, R30 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    assert!(r.diagnostics.is_empty());
    let r6 = r.registers[0].regular.get(&6).unwrap();
    assert_eq!(r6[0], 0x2a);
    let r8 = r.registers[0].regular.get(&8).unwrap();
    assert_eq!(r8[0], 0x2a);
}

#[test]
fn ldgsts_copies_global_to_shared() {
    let text = "\
[B------:R-:W-:Y0:S04] MOV R2, 0x400 ;
[B------:R-:W-:Y0:S04] MOV R4, 0x77 ;
[B------:R0:W-:Y0:S02] STG.E.32 [R2], R4 ;
[B------:R-:W-:Y0:S04] MOV R6, 0x800 ;
[B0-----:R1:W2:Y0:S02] LDGSTS.E.32 [R6], [R2] ;
[B-12---:R-:W3:Y0:S02] LDS.32 R8, [R6] ;
[B---3--:R-:W-:Y0:S00] IADD3 R10, R8, R30, R30 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
    assert_eq!(r.registers[0].regular.get(&10).unwrap()[0], 0x77);
}

#[test]
fn predicated_off_lanes_keep_destination() {
    let text = "[B------:R-:W-:Y0:S04] @P0 IADD3 R5, R2, R3, R4 ;\nEXIT ;\n";
    let init = vec![
        RegInit::Regular { warp: 0, index: 2, lanes: lanes(5) },
        RegInit::Regular { warp: 0, index: 5, lanes: lanes(9) },
        RegInit::Predicate { warp: 0, index: 0, mask: 0x1 },
    ];
    let r = run_with_init(&prog(text), &probe_cfg(), &init).unwrap();
    let r5 = r.registers[0].regular.get(&5).unwrap();
    assert_eq!(r5[0], 5, "active lane executes");
    assert_eq!(r5[1], 9, "masked lane keeps its old value");
}

#[test]
fn taken_branch_skips_instructions() {
    let text = "\
.base 0x0
[B------:R-:W-:Y0:S04] MOV R5, 0x1 ;
[B------:R-:W-:Y0:S00] BRA 0x30 ;
[B------:R-:W-:Y0:S04] MOV R5, 0x2 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    assert_eq!(r.registers[0].regular.get(&5).unwrap()[0], 1);
    assert!(
        !r.issue_trace(0).iter().any(|(pc, _)| *pc == 0x20),
        "the skipped instruction must never issue"
    );
}

#[test]
fn barrier_holds_until_all_arrive() {
    let mut cfg = SmConfig::default();
    cfg.sub_cores = 1;
    cfg.warps = 2;
    cfg.perfect_icache = true;
    let text = "\
[B------:R-:W-:Y0:S00] NOP ;
[B------:R-:W-:Y0:S02] BAR ;
[B------:R-:W-:Y0:S00] MOV R5, 0x1 ;
EXIT ;\n";
    let r = run(&prog(text), &cfg).unwrap();
    let bar_cycles: Vec<u64> = r
        .events
        .iter()
        .filter(|e| e.stage == "issue" && e.pc == Some(0x10))
        .map(|e| e.cycle)
        .collect();
    let mov_cycles: Vec<u64> = r
        .events
        .iter()
        .filter(|e| e.stage == "issue" && e.pc == Some(0x20))
        .map(|e| e.cycle)
        .collect();
    let last_bar = bar_cycles.iter().max().unwrap();
    assert!(
        mov_cycles.iter().all(|c| c > last_bar),
        "no warp passes the barrier before the last arrival"
    );
}

#[test]
fn uniform_destination_and_broadcast() {
    let text = "\
[B------:R-:W-:Y0:S04] MOV UR4, 0x42 ;
[B------:R-:W-:Y0:S04] IADD3 R5, UR4, R30, R30 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    assert_eq!(r.registers[0].uniform.get(&4), Some(&0x42));
    let r5 = r.registers[0].regular.get(&5).unwrap();
    assert!(r5.iter().all(|v| *v == 0x42), "uniform value is replicated across lanes");
}

#[test]
fn small_instruction_buffer_breaks_the_greedy_chain() {
    let mut cfg = probe_cfg();
    cfg.perfect_icache = true;
    let program = straightline(24);
    let smooth = run(&program, &cfg).unwrap();
    let gaps = |r: &RunResult| {
        r.issue_trace(0).windows(2).filter(|w| w[1].1 - w[0].1 > 1).count()
    };
    assert_eq!(gaps(&smooth), 0, "three entries sustain one instruction per cycle");

    let mut tiny = cfg.clone();
    tiny.ibuffer_entries = 2;
    let broken = run(&program, &tiny).unwrap();
    assert!(gaps(&broken) > 0, "a two-entry buffer starves the greedy warp");
}

#[test]
fn prefetcher_strictly_reduces_fetch_stalls_past_one_line() {
    let program = straightline(32);
    let mut base = SmConfig::default();
    base.warps = 1;
    let mut off = base.clone();
    off.prefetch_kind = PrefetchKind::None;
    let with = run(&program, &base).unwrap();
    let without = run(&program, &off).unwrap();
    let stalls = |r: &RunResult| r.stats.bubbles.get("icache").copied().unwrap_or(0);
    assert!(stalls(&with) < stalls(&without), "{} vs {}", stalls(&with), stalls(&without));
    assert!(with.stats.total_cycles < without.stats.total_cycles);
}

#[test]
fn arbiter_fairness_on_the_shared_memory_pipe() {
    let mut cfg = SmConfig::default();
    cfg.warps = 4;
    cfg.perfect_icache = true;
    let mut text = String::from(".base 0x0\n");
    for i in 0..16 {
        text.push_str(&format!("[B------:R-:W-:Y0:S00] LDG.E.32 R{}, [R2] ;\n", 10 + i));
    }
    text.push_str("EXIT ;\n");
    let r = run(&prog(&text), &cfg).unwrap();
    let grants = &r.stats.shared_grants;
    let min = grants.iter().min().unwrap();
    let max = grants.iter().max().unwrap();
    assert!(max - min <= 1, "grants {grants:?}");
}

#[test]
fn rfc_and_read_ports_sweep_directions() {
    // FFMA-dense kernel whose operands repeat, with reuse tagged.
    let mut text = String::from(".base 0x0\n");
    for i in 0..128 {
        text.push_str(&format!(
            "[B------:R-:W-:Y0:S00] FFMA R{}, R2.reuse, R4.reuse, R6.reuse ;\n",
            60 + (i % 8)
        ));
    }
    text.push_str("EXIT ;\n");
    let program = prog(&text);
    let cfg = probe_cfg();

    let rfc = sweep("regfile.rfc", &["on".into(), "off".into()], &program, &cfg).unwrap();
    assert!(
        rfc[0].1.total_cycles <= rfc[1].1.total_cycles,
        "operand cache never slows a kernel down"
    );
    assert!(
        rfc[0].1.allocate_hold_cycles <= rfc[1].1.allocate_hold_cycles,
        "cache hits must not add port pressure"
    );
    assert!(rfc[0].1.rfc_hits > 0);

    let mut no_rfc = cfg.clone();
    no_rfc.rfc_enabled = false;
    let ports =
        sweep("regfile.read_ports_per_bank", &["1".into(), "2".into()], &program, &no_rfc).unwrap();
    assert!(
        ports[1].1.total_cycles < ports[0].1.total_cycles,
        "a second read port must speed up a port-bound kernel"
    );
}

#[test]
fn mechanism_sweep_preserves_final_state() {
    let program = prog(
        "\
[B------:R-:W-:Y0:S04] MOV R2, 0x6 ;
[B------:R-:W-:Y0:S04] IADD3 R5, R2, R2, R2 ;
[B------:R-:W-:Y0:S04] IMAD R6, R5, R2, R2 ;
EXIT ;\n",
    );
    let cfg = probe_cfg();
    let a = run(&program, &cfg).unwrap();
    let mut sb = cfg.clone();
    sb.deps_mechanism = DepsMechanism::Scoreboard;
    let b = run(&program, &sb).unwrap();
    assert_eq!(a.registers, b.registers);
    assert_eq!(a.registers[0].regular.get(&6).unwrap()[0], 6 * 18 + 6);
}

#[test]
fn half_width_units_pace_issue() {
    let mut cfg = probe_cfg();
    cfg.int32_width = UnitWidth::Half;
    let text = "\
[B------:R-:W-:Y0:S00] IADD3 R10, R2, R3, R4 ;
[B------:R-:W-:Y0:S00] IADD3 R12, R5, R6, R7 ;
EXIT ;\n";
    let r = run(&prog(text), &cfg).unwrap();
    let t = r.issue_trace(0);
    assert_eq!(t[1].1 - t[0].1, 2, "half-width latch delays the second by one cycle");

    // Full-width units issue back to back.
    let r = run(&prog(text), &probe_cfg()).unwrap();
    let t = r.issue_trace(0);
    assert_eq!(t[1].1 - t[0].1, 1);
}

#[test]
fn fp32_dual_dispatch_absorbs_half_width() {
    let mut cfg = probe_cfg();
    cfg.fp32_width = UnitWidth::Half;
    cfg.fp32_dual_dispatch = true;
    let text = "\
[B------:R-:W-:Y0:S00] FADD R10, R2, R3 ;
[B------:R-:W-:Y0:S00] FADD R12, R5, R7 ;
EXIT ;\n";
    let r = run(&prog(text), &cfg).unwrap();
    let t = r.issue_trace(0);
    assert_eq!(t[1].1 - t[0].1, 1, "the second FP32 op dispatches to the other unit");

    cfg.fp32_dual_dispatch = false;
    let r = run(&prog(text), &cfg).unwrap();
    let t = r.issue_trace(0);
    assert_eq!(t[1].1 - t[0].1, 2);
}

#[test]
fn cycle_cap_faults_cleanly() {
    let mut cfg = probe_cfg();
    cfg.cycle_cap = 10;
    // Infinite loop: BRA back to itself.
    let text = ".base 0x0\nBRA 0x0 ;\nEXIT ;\n";
    let err = run(&prog(text), &cfg).unwrap_err();
    assert!(err.to_string().contains("cycle cap"));
}

#[test]
fn counter_overflow_is_a_hard_fault() {
    // Seventy producers share SB0 while a stretched latency table keeps
    // every release hundreds of cycles away, so the counter must pass 63.
    let mut text = String::from(".base 0x0\n");
    for i in 0..70 {
        text.push_str(&format!("[B------:R-:W0:Y0:S00] LDG.E.32 R{}, [R2] ;\n", 10 + (i % 64)));
    }
    text.push_str("EXIT ;\n");
    let mut cfg = probe_cfg();
    // Slow the release far past the issue rate so SB0 can climb.
    let mut ini = warpsim_core::LatencyTable::builtin().to_ini();
    for (w, raw) in [(32, 32), (64, 34), (128, 38)] {
        ini = ini.replace(
            &format!("load.global.{w}.regular.war = 11"),
            &format!("load.global.{w}.regular.war = 400"),
        );
        ini = ini.replace(
            &format!("load.global.{w}.regular.raw = {raw}"),
            &format!("load.global.{w}.regular.raw = 800"),
        );
    }
    cfg.latency_table = warpsim_core::LatencyTable::from_ini(&ini).unwrap();
    let err = run(&prog(&text), &cfg).unwrap_err();
    assert!(err.to_string().contains("overflow"), "{err}");
}

#[test]
fn warp_placement_is_id_mod_subcores() {
    let mut cfg = SmConfig::default();
    cfg.warps = 8;
    cfg.perfect_icache = true;
    let r = run(&straightline(8), &cfg).unwrap();
    for e in r.events.iter().filter(|e| e.stage == "issue") {
        let w = e.warp.unwrap();
        assert_eq!(e.subcore, w % 4, "warp {w} issued on sub-core {}", e.subcore);
    }
}

#[test]
fn four_demand_misses_granted_on_consecutive_cycles() {
    let mut cfg = SmConfig::default();
    cfg.warps = 4;
    cfg.prefetch_kind = PrefetchKind::None;
    let r = run(&straightline(8), &cfg).unwrap();
    let mut grants: Vec<(u64, usize)> = r
        .events
        .iter()
        .filter(|e| e.stage == "l1_grant")
        .map(|e| (e.cycle, e.subcore))
        .collect();
    grants.truncate(4);
    assert_eq!(grants, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
}

#[test]
fn constant_miss_stalls_four_cycles_then_sets_the_warp_aside() {
    // Two warps on one sub-core sharing a cold constant line: the sub-core
    // freezes on the youngest warp for four cycles, sets it aside, selects
    // the other warp, freezes again, and both issue once the fill lands.
    let mut cfg = SmConfig::default();
    cfg.sub_cores = 1;
    cfg.warps = 2;
    cfg.perfect_icache = true;
    let text = "\
[B------:R-:W-:Y0:S00] FFMA R8, R2, c[0x0][0x40], R6 ;
EXIT ;\n";
    let r = run(&prog(text), &cfg).unwrap();
    let misses: Vec<u64> = r
        .events
        .iter()
        .filter(|e| e.stage == "const_fl_miss")
        .map(|e| e.cycle)
        .collect();
    assert_eq!(misses.len(), 1, "one fill covers both warps");
    let t_miss = misses[0];
    let issues: Vec<(usize, u64)> = r
        .events
        .iter()
        .filter(|e| e.stage == "issue" && e.pc == Some(0))
        .map(|e| (e.warp.unwrap(), e.cycle))
        .collect();
    assert_eq!(issues.len(), 2);
    assert_eq!(issues[0].0, 1, "the youngest warp issues first after the fill");
    assert_eq!(issues[0].1, t_miss + 79);
    assert_eq!(issues[1].0, 0);
    assert!(issues[1].1 > issues[0].1, "the older warp follows once the greedy run ends");
    let const_bubbles = r.stats.bubbles.get("const_cache").copied().unwrap_or(0);
    assert!(const_bubbles >= 8, "both warps burn their four-cycle windows: {const_bubbles}");
}

#[test]
fn zeroing_any_protecting_bit_fails_the_linter() {
    let good = "\
.base 0x50
[B------:R-:W3:Y0:S00] LDG.E.32 R4, [R6] ;
[B------:R0:W3:Y0:S00] LDG.E.32 R5, [R2] ;
[B------:R0:W4:Y0:S02] LDG.E.64 R8, [R2] ;
[B0--3--:R-:W-:Y0:S00] IADD3 R2, R4, R5, R30 ;
EXIT ;\n";
    let errors = |text: &str| {
        warpsim_core::validate_program(
            &prog(text),
            &warpsim_core::LatencyTable::builtin(),
        )
        .into_iter()
        .filter(|d| d.severity == warpsim_core::Severity::Error)
        .count()
    };
    assert_eq!(errors(good), 0);
    // Zero the stall protecting the distance-1 wait.
    assert!(errors(&good.replace(":Y0:S02]", ":Y0:S00]")) > 0);
    // Zero the SB0 wait bit of the adder.
    assert!(errors(&good.replace("[B0--3--", "[B---3--")) > 0);
    // Zero the SB3 wait bit of the adder.
    assert!(errors(&good.replace("[B0--3--", "[B0-----")) > 0);
}

#[test]
fn clock_delta_of_the_same_capture_is_zero() {
    let text = "CLOCK R20 ;\nNOP ;\nCLOCK R22 ;\nEXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    assert_eq!(warpsim_core::measure_clock_delta(&r, 0, 0, 0).unwrap(), 0);
    assert_eq!(warpsim_core::measure_clock_delta(&r, 0, 1, 1).unwrap(), 0);
    assert!(warpsim_core::measure_clock_delta(&r, 0, 0, 5).is_err());
}

#[test]
fn empty_program_has_zero_stats() {
    let r = run(&prog(""), &probe_cfg()).unwrap();
    assert_eq!(r.stats.total_cycles, 0);
    assert_eq!(r.stats.instructions_issued, 0);
    assert!(r.stats.bubbles.is_empty());
    assert!(r.events.is_empty());
    assert!(r.diagnostics.is_empty());
}

#[test]
fn missing_latency_row_faults_instead_of_panicking() {
    // The default table has no uniform-addressed LDC row.
    let text = "LDC.32 R4, c[0x0][UR2] ;\nEXIT ;\n";
    let err = run(&prog(text), &probe_cfg()).unwrap_err();
    assert!(err.to_string().contains("no latency entry"), "{err}");
}

#[test]
fn depbar_threshold_gates_issue() {
    // Two loads share SB1; the DEPBAR passes once the counter drops to one,
    // which happens at the first load's write-back release.
    let text = "\
[B------:R-:W1:Y0:S00] LDG.E.32 R4, [R2] ;
[B------:R-:W1:Y0:S02] LDG.E.32 R6, [R8] ;
[B------:R-:W-:Y0:S00] DEPBAR.LE SB1, 0x1 ;
[B------:R-:W-:Y0:S00] MOV R20, R21 ;
EXIT ;\n";
    let r = run(&prog(text), &probe_cfg()).unwrap();
    let t = r.issue_trace(0);
    let t_load1 = t[0].1;
    let t_depbar = t.iter().find(|(pc, _)| *pc == 0x20).unwrap().1;
    assert_eq!(t_depbar, t_load1 + 32, "DEPBAR waits for exactly one release");
}

#[test]
fn hybrid_mode_honors_the_program_hint() {
    let base = "\
[B------:R-:W-:Y0:S00] FFMA R5, R2, R3, R4 ;
[B------:R-:W-:Y0:S00] FADD R6, R5, R7 ;
EXIT ;\n";
    let init = vec![
        RegInit::Regular { warp: 0, index: 2, lanes: lanes(2.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 3, lanes: lanes(3.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 4, lanes: lanes(1.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 7, lanes: lanes(1.0f32.to_bits()) },
    ];
    let mut cfg = probe_cfg();
    cfg.deps_mechanism = DepsMechanism::Hybrid;

    // Without a hint, hybrid mode trusts the (broken) control bits.
    let cb = run_with_init(&prog(base), &cfg, &init).unwrap();
    assert!(!cb.diagnostics.is_empty());

    // The scoreboard hint makes the same program hazard-safe.
    let hinted = format!(".hazards scoreboard\n{base}");
    let sb = run_with_init(&prog(&hinted), &cfg, &init).unwrap();
    assert!(sb.diagnostics.is_empty());
    assert_eq!(f32::from_bits(sb.registers[0].regular.get(&6).unwrap()[0]), 8.0);
}

#[test]
fn yield_is_ignored_when_stall_exceeds_one() {
    // Stall 4 with yield set behaves exactly like stall 4 alone.
    let with_yield = "\
[B------:R-:W-:Y0:S00] MOV R5, 0x1 ;
[B------:R-:W-:Y1:S04] MOV R6, 0x2 ;
[B------:R-:W-:Y0:S00] MOV R7, 0x3 ;
EXIT ;\n";
    let r = run(&prog(with_yield), &probe_cfg()).unwrap();
    let t = r.issue_trace(0);
    assert_eq!(t[2].1 - t[1].1, 5, "stall 4 blocks for four cycles, yield adds nothing");
}

#[test]
fn parser_rejects_garbage_without_panicking() {
    for text in [
        "[B0-----", "FFMA ;", "LDG.E.256 R4, [R2] ;", "MOV R5 R6 ;", "@Q0 NOP ;",
        "[B------:R9:W-:Y0:S00] NOP ;", "[B------:R-:W-:Y0:S99] NOP ;",
        "DEPBAR.LE SB1, 0x40 ;", "BRA 0x7 ;", "LDC.128 R4, c[0x0][0x0] ;",
        "STS.64 [R2], R5 ;", "\u{1F600} ;",
    ] {
        assert!(parse_program(text).is_err(), "`{text}` should not parse");
    }
}

#[test]
fn issue_trace_cycles_never_decrease() {
    let mut cfg = SmConfig::default();
    cfg.sub_cores = 1;
    cfg.warps = 4;
    let r = run(&straightline(64), &cfg).unwrap();
    let cycles: Vec<u64> = r.events.iter().map(|e| e.cycle).collect();
    assert!(cycles.windows(2).all(|w| w[0] <= w[1]), "timeline must be cycle-ordered");
}

#[test]
fn divergent_branch_is_a_fault() {
    let text = "[B------:R-:W-:Y0:S00] @P0 BRA 0x20 ;\nNOP ;\nEXIT ;\n";
    let init = vec![RegInit::Predicate { warp: 0, index: 0, mask: 0x1 }];
    let program = prog(text);
    let mut sim = warpsim_core::Simulator::new(&program, probe_cfg());
    sim.apply_init(&init);
    let err = sim.run_to_completion().unwrap_err();
    assert!(err.to_string().contains("divergent"), "{err}");
}

#[test]
fn wide_store_load_round_trip_through_global_memory() {
    let text = "\
[B------:R-:W-:Y0:S04] MOV R2, 0x1000 ;
[B------:R0:W-:Y0:S02] STG.E.128 [R2], R4 ;
[B0-----:R-:W1:Y0:S02] LDG.E.128 R8, [R2] ;
[B-1----:R-:W-:Y0:S00] IADD3 R20, R8, R9, R10 ;
EXIT ;\n";
    let init = vec![
        RegInit::Regular { warp: 0, index: 4, lanes: lanes(11) },
        RegInit::Regular { warp: 0, index: 5, lanes: lanes(22) },
        RegInit::Regular { warp: 0, index: 6, lanes: lanes(33) },
        RegInit::Regular { warp: 0, index: 7, lanes: lanes(44) },
    ];
    let r = run_with_init(&prog(text), &probe_cfg(), &init).unwrap();
    assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
    for (reg, want) in [(8u8, 11u32), (9, 22), (10, 33), (11, 44)] {
        assert_eq!(r.registers[0].regular.get(&reg).unwrap()[0], want, "R{reg}");
    }
    assert_eq!(r.registers[0].regular.get(&20).unwrap()[0], 11 + 22 + 33);
}

#[test]
fn memory_bypasses_a_held_allocate_stage() {
    // A load behind a port-conflicted FFMA pair proceeds to the LSU queue
    // without waiting for the Allocate stage to drain.
    let conflicted = "\
[B------:R-:W-:Y0:S00] FFMA R11, R2, R4, R6 ;
[B------:R-:W-:Y0:S00] FFMA R13, R2, R4, R6 ;
[B------:R-:W1:Y0:S00] LDG.E.32 R20, [R8] ;
EXIT ;\n";
    let clean = "\
[B------:R-:W-:Y0:S00] FFMA R11, R2, R5, R7 ;
[B------:R-:W-:Y0:S00] FFMA R13, R3, R4, R9 ;
[B------:R-:W1:Y0:S00] LDG.E.32 R20, [R8] ;
EXIT ;\n";
    let grant = |text: &str| {
        let r = run(&prog(text), &probe_cfg()).unwrap();
        r.events
            .iter()
            .find(|e| e.stage == "shared_grant")
            .map(|e| e.cycle)
            .expect("load reaches the shared structures")
    };
    assert_eq!(
        grant(conflicted),
        grant(clean),
        "allocate holds of older arithmetic must not delay the memory pipe"
    );
}

#[test]
fn fixed_latency_contract_survives_port_conflicts() {
    // The conflicted FFMA (two hold cycles) still delivers its result to a
    // stall-covered consumer: same architectural outcome as the
    // conflict-free layout, no hazard diagnostics in either.
    let conflicted = "\
[B------:R-:W-:Y0:S00] FFMA R11, R2, R4, R6 ;
[B------:R-:W-:Y0:S04] FFMA R13, R2, R4, R6 ;
[B------:R-:W-:Y0:S00] FADD R15, R13, R7 ;
EXIT ;\n";
    let clean = "\
[B------:R-:W-:Y0:S00] NOP ;
[B------:R-:W-:Y0:S04] FFMA R13, R2, R4, R6 ;
[B------:R-:W-:Y0:S00] FADD R15, R13, R7 ;
EXIT ;\n";
    let init = vec![
        RegInit::Regular { warp: 0, index: 2, lanes: lanes(2.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 4, lanes: lanes(3.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 5, lanes: lanes(3.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 6, lanes: lanes(1.0f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 7, lanes: lanes(0.5f32.to_bits()) },
        RegInit::Regular { warp: 0, index: 9, lanes: lanes(1.0f32.to_bits()) },
    ];
    let a = run_with_init(&prog(conflicted), &probe_cfg(), &init).unwrap();
    let b = run_with_init(&prog(clean), &probe_cfg(), &init).unwrap();
    assert!(a.diagnostics.is_empty(), "{:?}", a.diagnostics);
    assert!(b.diagnostics.is_empty());
    let r15 = |r: &warpsim_core::RunResult| f32::from_bits(r.registers[0].regular[&15][0]);
    assert_eq!(r15(&a), 7.5);
    assert_eq!(r15(&a), r15(&b));
    assert!(
        a.stats.allocate_hold_cycles > b.stats.allocate_hold_cycles,
        "the conflicted layout really did hold"
    );
}
