//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use gpsing::asymptotics::run_sweep;
use gpsing::grid::build_grid;
use gpsing::profile::{cross_validate, solve_w_shooting};
use gpsing::report::config::{Command, FileConfig, RunConfig};
use gpsing::report::verify::{verify_suites, Check, SuiteResult, Verifier};
use gpsing::{Execution, Exponents, FlowConfig, Potential};

const CASES: [(usize, f64, f64); 3] = [(1, 2.0, 0.5), (2, 1.5, 0.8), (3, 1.2, 0.5)];

struct Criterion {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn config(n: usize, p: f64, b: f64, potential: &str, suites: &[&str]) -> RunConfig {
    let fc = FileConfig {
        n: Some(n),
        p: Some(p),
        b: Some(b),
        potential: Some(potential.into()),
        suites: Some(suites.iter().map(|s| s.to_string()).collect()),
        ..FileConfig::default()
    };
    RunConfig::resolve(Command::Verify, fc, None).expect("valid config")
}

fn case_a(potential: &str) -> RunConfig {
    config(1, 2.0, 0.5, potential, &["all"])
}

/// Checks of `suite` whose names start with one of `prefixes`.
fn pick<'a>(suite: &'a SuiteResult, prefixes: &[&str]) -> Vec<&'a Check> {
    suite
        .checks
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect()
}

fn summarize(checks: &[&Check], error: &Option<String>) -> (bool, String) {
    if let Some(e) = error {
        return (false, format!("error: {e}"));
    }
    let ok = !checks.is_empty() && checks.iter().all(|c| c.passed);
    let detail = checks
        .iter()
        .map(|c| format!("{} = {:.3e} ({})", c.name, c.value, c.bound))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn main() {
    let mut results = Vec::new();
    let trapped = case_a("harmonic");
    let v = Verifier::new(&trapped);

    // 1
    {
        let mut ok = true;
        let mut parts = Vec::new();
        for &(n, p, b) in &CASES {
            let e = Exponents::new(n, p, b).unwrap();
            let start = Instant::now();
            let w = solve_w_shooting(&e, build_grid(n, 20.0, 4001, 2.0).unwrap(), None);
            let elapsed = start.elapsed();
            match w {
                Ok(w) => {
                    let pass = w.pohozaev_res.0 <= 1e-4
                        && w.pohozaev_res.1 <= 1e-4
                        && elapsed <= Duration::from_secs(10);
                    ok &= pass;
                    parts.push(format!(
                        "({n},{p},{b}): residuals ({:.2e}, {:.2e}) in {:.2}s",
                        w.pohozaev_res.0,
                        w.pohozaev_res.1,
                        elapsed.as_secs_f64()
                    ));
                }
                Err(err) => {
                    ok = false;
                    parts.push(format!("({n},{p},{b}): {err}"));
                }
            }
        }
        results.push(Criterion {
            id: 1,
            title: "Pohozaev identities",
            passed: ok,
            detail: parts.join("; "),
        });
    }

    // 2
    {
        let mut ok = true;
        let mut parts = Vec::new();
        for &(n, p, b) in &CASES {
            let e = Exponents::new(n, p, b).unwrap();
            match cross_validate(&e, build_grid(n, 20.0, 4001, 2.0).unwrap(), &FlowConfig::default()) {
                Ok((_, cv)) => {
                    ok &= cv.a_star_rel <= 1e-3 && cv.sup_rel <= 1e-3;
                    parts.push(format!(
                        "({n},{p},{b}): a* diff {:.2e}, sup diff/w(0) {:.2e}",
                        cv.a_star_rel, cv.sup_rel
                    ));
                }
                Err(err) => {
                    ok = false;
                    parts.push(format!("({n},{p},{b}): {err}"));
                }
            }
        }
        results.push(Criterion {
            id: 2,
            title: "flow and shooting agree",
            passed: ok,
            detail: parts.join("; "),
        });
    }

    // 3
    {
        let s = v.run("gn");
        let (passed, detail) = summarize(&pick(&s, &["max gn_ratio", "gn_ratio(w)"]), &s.error);
        results.push(Criterion {
            id: 3,
            title: "sharp Gagliardo-Nirenberg ratio",
            passed,
            detail,
        });
    }

    // 4
    {
        let free = case_a("zero");
        let vf = Verifier::new(&free);
        let s = vf.run("scaling");
        let (mut passed, mut detail) = summarize(&pick(&s, &["trap-free energy law"]), &s.error);
        let l1 = Exponents::new(1, 2.0, 0.5).unwrap().lambda0();
        let l3 = Exponents::new(3, 1.2, 0.5).unwrap().lambda0();
        let spot = (l1 - 0.5).abs() < 1e-14 && (l3 - 6.0 / 7.0).abs() < 1e-14;
        passed &= spot;
        detail.push_str(&format!("; lambda0 spot values {l1}, {l3}"));
        results.push(Criterion {
            id: 4,
            title: "trap-free energy law",
            passed,
            detail,
        });
    }

    // 5
    {
        let start = Instant::now();
        let sweep = v.sweep().map(|_| ());
        let elapsed = start.elapsed();
        let s = v.run("scaling");
        let (mut passed, mut detail) = summarize(
            &pick(&s, &["all sweep rows", "|ratio + lambda0|", "ratio error decreasing"]),
            &s.error,
        );
        passed &= sweep.is_ok() && elapsed <= Duration::from_secs(600);
        detail.push_str(&format!("; sweep time {:.2}s", elapsed.as_secs_f64()));
        results.push(Criterion {
            id: 5,
            title: "trapped energy limit",
            passed,
            detail,
        });
    }

    let conc = v.run("concentration");

    // 6
    {
        let (passed, detail) = summarize(&pick(&conc, &["trap_mass"]), &conc.error);
        results.push(Criterion {
            id: 6,
            title: "trap energy vanishes",
            passed,
            detail,
        });
    }

    // 7
    {
        let s = v.run("multiplier");
        let (passed, detail) = summarize(&pick(&s, &["|eps^2 mu + 1|"]), &s.error);
        results.push(Criterion {
            id: 7,
            title: "multiplier limit",
            passed,
            detail,
        });
    }

    // 8
    {
        let (passed, detail) = summarize(&pick(&conc, &["sup_dist", "h1_dist"]), &conc.error);
        results.push(Criterion {
            id: 8,
            title: "profile concentration",
            passed,
            detail,
        });
    }

    // 9
    {
        let s = v.run("decay");
        let (passed, detail) = summarize(&pick(&s, &["tail rate", "fit quality"]), &s.error);
        results.push(Criterion {
            id: 9,
            title: "exponential decay",
            passed,
            detail,
        });
    }

    // 10
    {
        let s = v.run("sandwich");
        let (passed, detail) = summarize(&pick(&s, &["lower <= I(M)", "closed-form lower", "A_tau"]), &s.error);
        results.push(Criterion {
            id: 10,
            title: "energy sandwich",
            passed,
            detail,
        });
    }

    // 11
    {
        let cfg = case_a("harmonic");
        let first = serde_json::to_string(&verify_suites(&cfg)).unwrap();
        let second = serde_json::to_string(&verify_suites(&cfg)).unwrap();
        let w = v.w().expect("profile");
        let run = |exec| {
            let rep = run_sweep(w, &Potential::harmonic(), &cfg.m_list, &cfg.flow_config(), exec, true).unwrap();
            serde_json::to_string(&rep).unwrap()
        };
        let same_exec = run(Execution::Sequential) == run(Execution::Parallel);
        results.push(Criterion {
            id: 11,
            title: "deterministic reports",
            passed: first == second && same_exec,
            detail: format!(
                "repeated verify reports identical: {}; sequential and parallel sweeps identical: {}",
                first == second,
                same_exec
            ),
        });
    }

    let mut failed = 0;
    for c in &results {
        if !c.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} | {}",
            c.id,
            c.title,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
