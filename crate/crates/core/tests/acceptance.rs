//! Acceptance suite: every check replays a measured hardware behavior at
//! its stated tolerance and prints one pass/fail line per criterion.
//! `warpsim bench all` runs the same corpus from the command line.

use warpsim_core::bench::{run_bench, BenchOutcome};

fn report(criterion: &str, outcomes: &[BenchOutcome]) {
    let pass = outcomes.iter().all(|o| o.passed());
    println!("criterion {criterion}: {}", if pass { "PASS" } else { "FAIL" });
    for o in outcomes {
        for c in &o.checks {
            if !c.pass {
                println!("  [{}] {}: {}", o.bench, c.name, c.detail);
            }
        }
    }
    assert!(pass, "criterion {criterion} failed");
}

fn outcomes(names: &[&str]) -> Vec<BenchOutcome> {
    names.iter().map(|n| run_bench(n).expect("bench exists")).collect()
}

#[test]
fn criterion_01_rf_conflict_trio() {
    report("1 (register-file conflict trio)", &outcomes(&["rf_conflicts", "rf_conflicts_nonop"]));
}

#[test]
fn criterion_02_memory_issue_table() {
    report("2 (memory issue-cycle table)", &outcomes(&["mem_issue_table"]));
}

#[test]
fn criterion_03_latency_table_contract() {
    report("3 (latency-table contract)", &outcomes(&["mem_latency_table"]));
}

#[test]
fn criterion_04_issue_scheduler_timelines() {
    report(
        "4 (issue-scheduler timelines)",
        &outcomes(&["cggty_fig_warm", "cggty_fig_cold", "cggty_fig_stall", "cggty_fig_yield"]),
    );
}

#[test]
fn criterion_05_register_file_cache() {
    report("5 (register-file cache semantics)", &outcomes(&["rfc_listing", "rfc_pair_holds"]));
}

#[test]
fn criterion_06_dependence_counters() {
    report("6 (dependence-counter semantics)", &outcomes(&["deps_fig"]));
}

#[test]
fn criterion_07_area_arithmetic() {
    report("7 (area arithmetic)", &outcomes(&["area"]));
}

#[test]
fn criterion_08_mechanism_equivalence() {
    report("8 (mechanism equivalence)", &outcomes(&["mechanism_equivalence"]));
}

#[test]
fn criterion_09_prefetcher_ordering() {
    report("9 (prefetcher ordering)", &outcomes(&["prefetch_sweep"]));
}

#[test]
fn criterion_10_determinism() {
    report("10 (determinism)", &outcomes(&["determinism"]));
}

#[test]
fn constant_cache_paths() {
    // Folded into criterion 3/6 territory: the two constant-cache levels
    // stay disjoint and the fixed-latency miss costs its full delay.
    report("const (L0-FL vs L0-VL)", &outcomes(&["const_fl"]));
}
