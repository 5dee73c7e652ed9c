use std::path::Path;
use std::process::{Command, Output};

fn hapaltmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hapaltmin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn field(csv: &str, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == name).unwrap()].to_string()
}

#[test]
fn simulate_assemble_evaluate_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = hapaltmin(&[
        "simulate", "--m", "300", "--model", "uniform", "--n", "400", "--p", "0.05", "--error-rate", "0", "--seed",
        "7", "--out", p(d),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (frag, truth, hap, trace) = (d.join("sim.frag"), d.join("sim.truth"), d.join("h.txt"), d.join("t.csv"));

    let o = hapaltmin(&[
        "assemble", "--input", p(&frag), "--algorithm", "soft", "--max-iters", "100", "--out", p(&hap), "--trace",
        p(&trace), "--truth", p(&truth),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = std::fs::read_to_string(&hap).unwrap();
    assert_eq!(line.trim().len(), 300);
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("iteration,dist,mec,delta\n"));

    let o = hapaltmin(&["evaluate", "--input", p(&frag), "--haplotype", p(&hap), "--truth", p(&truth)]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(field(&csv, "reconstruction_rate").parse::<f64>().unwrap(), 1.0);
    assert_eq!(field(&csv, "mec"), "0");
}

#[test]
fn simulate_contiguous_writes_parseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = hapaltmin(&[
        "simulate", "--m", "700", "--coverage", "5", "--error-rate", "0.1", "--model", "contiguous", "--seed", "7",
        "--out", p(d),
    ]);
    assert!(o.status.success());
    let f = hapaltmin::parse_fragments(std::fs::read_to_string(d.join("sim.frag")).unwrap().as_bytes()).unwrap();
    assert_eq!(f.m(), 700);
    let truth = std::fs::read_to_string(d.join("sim.truth")).unwrap();
    let lines: Vec<&str> = truth.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0].len(), 700);
    assert_eq!(lines[1].split_whitespace().count(), f.n());
    assert!(lines[2].contains("seed=7"));
}

#[test]
fn truth_scores_perfectly_and_complement_too() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(hapaltmin(&["simulate", "--m", "80", "--coverage", "6", "--error-rate", "0.05", "--out", p(d)])
        .status
        .success());
    let truth_text = std::fs::read_to_string(d.join("sim.truth")).unwrap();
    let hap = truth_text.lines().next().unwrap();
    let comp: String = hap.chars().map(|c| if c == '0' { '1' } else { '0' }).collect();
    let f = hapaltmin::parse_fragments(std::fs::read_to_string(d.join("sim.frag")).unwrap().as_bytes()).unwrap();
    let mut mecs = Vec::new();
    for (name, h) in [("a.txt", hap.to_string()), ("b.txt", comp)] {
        std::fs::write(d.join(name), format!("{h}\n")).unwrap();
        let o = hapaltmin(&[
            "evaluate", "--input", p(&d.join("sim.frag")), "--haplotype", p(&d.join(name)), "--truth",
            p(&d.join("sim.truth")),
        ]);
        assert!(o.status.success());
        let csv = stdout(&o);
        assert_eq!(field(&csv, "reconstruction_rate").parse::<f64>().unwrap(), 1.0);
        mecs.push(field(&csv, "mec").parse::<usize>().unwrap());
    }
    assert_eq!(mecs[0], mecs[1]);
    // Every read is scored against the truth, so MEC never exceeds the flipped-entry count.
    let truth = hapaltmin::simread::read_truth(truth_text.as_bytes()).unwrap().truth;
    let flipped = f.entries().filter(|e| e.value != truth.value(e.snp, e.read)).count();
    assert!(mecs[0] <= flipped);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(hapaltmin(&["simulate", "--out", p(d)]).status.code(), Some(2));
    assert_eq!(hapaltmin(&["frobnicate"]).status.code(), Some(2));

    let bad = d.join("bad.frag");
    std::fs::write(&bad, "3 2\n1 9 0\n").unwrap();
    let o = hapaltmin(&["assemble", "--input", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let empty = d.join("empty.frag");
    std::fs::write(&empty, "3 2\n").unwrap();
    assert_eq!(hapaltmin(&["assemble", "--input", p(&empty)]).status.code(), Some(3));

    let good = d.join("good.frag");
    std::fs::write(&good, "3 2\n1 1 0 2 0 3 1\n2 1 1 2 1\n").unwrap();
    let short = d.join("short.txt");
    std::fs::write(&short, "01\n").unwrap();
    assert_eq!(hapaltmin(&["evaluate", "--input", p(&good), "--haplotype", p(&short)]).status.code(), Some(2));
    assert_eq!(hapaltmin(&["assemble", "--input", p(&d.join("missing.frag"))]).status.code(), Some(2));
}

#[test]
fn all_algorithms_available() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(hapaltmin(&["simulate", "--m", "50", "--coverage", "8", "--out", p(d)]).status.success());
    for alg in ["ls", "hard", "soft"] {
        let o = hapaltmin(&["assemble", "--input", p(&d.join("sim.frag")), "--algorithm", alg]);
        assert!(o.status.success());
        assert_eq!(stdout(&o).trim().len(), 50);
    }
}

#[test]
fn bench_is_byte_reproducible() {
    let args = [
        "bench", "--suite", "table3", "--m", "40", "--error-rates", "0,0.1", "--coverages", "4", "--replicates", "3",
        "--seed", "9", "--no-timestamp", "--no-timing",
    ];
    let a = hapaltmin(&args);
    let b = hapaltmin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with(
        "error_rate,coverage,algorithm,replicates,mean_rate,sd_rate,mean_mec_norm,mean_runtime_ms,bound_pass_rate\n"
    ));
    assert_eq!(text.lines().count(), 3);

    // One cell alone equals the same cell inside the grid.
    let mut single = args.to_vec();
    single[6] = "0.1";
    let one = stdout(&hapaltmin(&single));
    assert_eq!(one.lines().nth(1), text.lines().nth(2));

    let stamped = stdout(&hapaltmin(&args[..args.len() - 2]));
    assert!(stamped.starts_with("# generated"));
}

#[test]
fn bench_fig2_and_compare_suites_run() {
    let o = hapaltmin(&[
        "bench", "--suite", "fig2", "--dims", "20x40", "--samples-per-read", "4", "--replicates", "2",
        "--svt-max-iters", "20", "--no-timestamp",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);

    let o = hapaltmin(&["bench", "--suite", "compare", "--m", "60", "--replicates", "2", "--no-timestamp", "--threads", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn theory_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    std::fs::write(&cfg, "m=200\nn=200\np_e=0.05\ncheck=noise\np=0.5\nseeds=5\n").unwrap();
    let o = hapaltmin(&["theory", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("noise_spectral_bound,4.0"));
    assert!(text.contains("noise_pass_rate,1.0000"));
}
