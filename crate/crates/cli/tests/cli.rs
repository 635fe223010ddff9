use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use moranrec::backward::BackwardModel;
use moranrec::expectation::expected_sampling;
use moranrec::measure::{read_measure_csv, PopulationState, SiteSpace};
use moranrec::partition::{Partition, SiteSet};
use moranrec::recombination::RecombinationDistribution;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("moranrec-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    fs::write(dir.join("run.toml"), config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_moranrec"))
        .args(args)
        .arg("--config")
        .arg(dir.join("run.toml"))
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_SITES: &str = r#"
sites = 2
population_size = 3
crossover_probs = [0.3]
initial_population = "00:2 11:1"
t_end = 2.0
grid = 5
replicates = 20
seed = 11
"#;

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Data files by path, plus the manifest's config hash.
fn outputs(dir: &Path, cmd: &str) -> (Vec<(String, Vec<u8>)>, String) {
    let manifest = format!("manifest-{cmd}.toml");
    let m: toml::Table = fs::read_to_string(dir.join("out").join(&manifest))
        .unwrap()
        .parse()
        .unwrap();
    let files = read_dir_bytes(&dir.join("out"))
        .into_iter()
        .filter(|(p, _)| *p != manifest)
        .collect();
    (files, m["config_hash"].as_str().unwrap().to_string())
}

#[test]
fn fixed_seed_gives_identical_files() {
    for cmd in ["simulate-forward", "simulate-backward"] {
        let a = scratch(&format!("det-a-{cmd}"));
        let b = scratch(&format!("det-b-{cmd}"));
        assert!(run(&a, TWO_SITES, &[cmd]).status.success());
        assert!(run(&b, TWO_SITES, &[cmd]).status.success());
        let (fa, ha) = outputs(&a, cmd);
        let (fb, hb) = outputs(&b, cmd);
        assert!(fa.len() > 20);
        assert_eq!(fa, fb, "{cmd}");
        assert_eq!(ha, hb);
        let c = scratch(&format!("det-c-{cmd}"));
        run(&c, TWO_SITES, &[cmd, "--seed", "12"]);
        let (fc, hc) = outputs(&c, cmd);
        assert_ne!(fa, fc);
        assert_ne!(ha, hc);
    }
}

#[test]
fn manifest_records_seed_and_config_hash() {
    let d = scratch("manifest");
    assert!(run(&d, TWO_SITES, &["expectations", "--seed", "5"]).status.success());
    let m: toml::Table = fs::read_to_string(d.join("out/manifest-expectations.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(m["seed"].as_integer(), Some(5));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["files"].as_array().unwrap()[0]["path"].as_str(), Some("expectations.csv"));
}

#[test]
fn duality_check_passes() {
    let d = scratch("duality");
    let o = run(&d, TWO_SITES, &["duality-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("defect < 1e-10"));
}

#[test]
fn zero_replicates_summarise_the_initial_state() {
    let d = scratch("reps0");
    let o = run(&d, TWO_SITES, &["simulate-forward", "--reps", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(d.join("out/forward_summary.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("0.0000000000000000e0,")));
    assert!(rows[0].contains(",00,6.6666666666666663e-1,"));
    assert!(!d.join("out/forward").exists());
}

#[test]
fn validation_errors_exit_2_with_the_line() {
    let d = scratch("invalid");
    let o = run(&d, &TWO_SITES.replace("crossover_probs = [0.3]", "crossover_probs = [1.3]"), &["fixation"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.toml:4: `crossover_probs`"), "{}", stderr(&o));
    let o = run(&d, TWO_SITES, &["simulate-backward", "--variant", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--variant"));
}

#[test]
fn state_space_cap_exits_3() {
    let d = scratch("cap");
    let cfg = TWO_SITES.replace("population_size = 3", "population_size = 200")
        .replace("00:2 11:1", "00:100 11:100")
        + "state_cap = 1000\n";
    let o = run(&d, &cfg, &["duality-check"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn lde_prints_the_transform_diagonal() {
    let d = scratch("lde");
    let cfg = r#"
sites = 3
population_size = 10
crossover_probs = [0.1, 0.2]
initial_population = "000:6 111:3 010:1"
"#;
    let o = run(&d, cfg, &["lde"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .take(5)
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    let (n, r1, r2) = (10.0, 0.1, 0.2);
    let want = [
        -6.0 / n - (n - 1.0) * (n - 2.0) * (r1 + r2) / (n * n),
        -2.0 / n - (n - 1.0) * r2 / n,
        -2.0 / n - (n - 1.0) * r1 / n,
        -2.0 / n - (n - 1.0) * (r1 + r2) / n,
        0.0,
    ];
    for (v, w) in values.iter().zip(want) {
        assert!((v - w).abs() < 1e-12, "{v} vs {w}");
    }
    assert!(d.join("out/lde.csv").exists());
}

#[test]
fn fixation_without_recombination_returns_initial_frequencies() {
    let d = scratch("fix");
    let cfg = TWO_SITES.replace("[0.3]", "[0.0]");
    assert!(run(&d, &cfg, &["fixation"]).status.success());
    let f = fs::File::open(d.join("out/fixation.csv")).unwrap();
    let m = read_measure_csv(f, SiteSet::full(2).unwrap(), &[2, 2]).unwrap();
    let want = [2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0];
    for (x, w) in want.iter().enumerate() {
        assert!((m.weight(x) - w).abs() < 1e-15);
    }
}

fn backward_paths(dir: &Path) -> Vec<Vec<Partition>> {
    let mut out = Vec::new();
    let mut files: Vec<PathBuf> = fs::read_dir(dir.join("out/backward"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let mut rdr = csv::Reader::from_path(f).unwrap();
        out.push(
            rdr.records()
                .map(|r| r.unwrap()[1].parse().unwrap())
                .collect(),
        );
    }
    out
}

#[test]
fn backward_variants_from_the_command_line() {
    let cfg = r#"
sites = 4
crossover_probs = [0.2, 0.3, 0.1]
rho = [1.0, 2.0, 0.5]
t_end = 3.0
replicates = 30
"#;
    let d = scratch("det");
    assert!(run(&d, cfg, &["simulate-backward", "--variant", "deterministic"]).status.success());
    for path in backward_paths(&d) {
        assert!(path.windows(2).all(|w| w[1].refines(&w[0]).unwrap()));
    }
    let d = scratch("diff");
    assert!(run(&d, cfg, &["simulate-backward", "--variant", "diffusion"]).status.success());
    for path in backward_paths(&d) {
        for w in path.windows(2) {
            let split = w[1].refines(&w[0]).unwrap() && w[1].len() == w[0].len() + 1;
            let merge = w[0].refines(&w[1]).unwrap() && w[0].len() == w[1].len() + 1;
            assert!(split || merge, "{} -> {}", w[0], w[1]);
        }
    }
    let d = scratch("det0");
    let cfg0 = format!("{cfg}initial_partition = \"1|2|3|4\"\n");
    assert!(run(&d, &cfg0, &["simulate-backward", "--variant", "deterministic"]).status.success());
    assert!(backward_paths(&d).iter().all(|p| p.len() == 1));
}

#[test]
fn forward_mean_matches_expectation() {
    let d = scratch("mc");
    let cfg = r#"
sites = 2
population_size = 10
crossover_probs = [0.2]
initial_population = "00:4 11:4 01:2"
t_end = 1.0
grid = 2
replicates = 10000
seed = 3
"#;
    let o = run(&d, cfg, &["simulate-forward", "--summary-only"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let space = SiteSpace::binary(2).unwrap();
    let z0 = PopulationState::parse(space, "00:4 11:4 01:2").unwrap();
    let b = BackwardModel::finite(RecombinationDistribution::new(vec![0.2]).unwrap(), 10).unwrap();
    let exact = &expected_sampling(&b, &z0, &"1,2".parse().unwrap(), &[1.0]).unwrap()[0];
    let mut rdr = csv::Reader::from_path(d.join("out/forward_summary.csv")).unwrap();
    let mut checked = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        if r[0].parse::<f64>().unwrap() != 1.0 {
            continue;
        }
        let x = z0.space().parse_type(&r[1]).unwrap();
        let (mean, se): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((mean - exact.weight(x)).abs() <= 3.0 * se, "type {}: {mean} vs {}", &r[1], exact.weight(x));
        checked += 1;
    }
    assert_eq!(checked, 4);
}
