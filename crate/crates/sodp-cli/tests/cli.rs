//! End-to-end checks of the `sodp` binary: exit codes, cache flows, CSV
//! shapes, and byte-level determinism. Everything here runs on populations
//! small enough to build in milliseconds.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn sodp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sodp"))
}

fn run(args: &[&str]) -> Output {
    sodp().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

#[test]
fn sieve_then_census_adds_up() {
    let dir = tempdir().unwrap();
    let cache = dir.path().join("p.bin");
    let out = run(&[
        "sieve",
        "--count",
        "1000",
        "--cache",
        cache.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.starts_with("# sodp sieve count=1000"));
    assert!(text.contains("count,max_prime\n1000,7919\n"), "{text}");
    assert!(cache.exists());

    let out = run(&[
        "census",
        "--cache",
        cache.to_str().unwrap(),
        "--count",
        "1000",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let row = text.lines().last().unwrap();
    let fields: Vec<u64> = row.split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 1000); // N
    assert_eq!(fields[1], 10); // base
    assert_eq!(fields[2] + fields[3], 1000); // odd + even
}

#[test]
fn census_of_five_primes_is_exact() {
    let out = run(&["census", "--count", "5"]);
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("\n5,10,3,2\n"), "{}", stdout(&out));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["census", "--no-such-flag"]);
    assert_exit(&out, 1);
    assert!(stderr(&out).contains("--no-such-flag"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = run(&["frobnicate"]);
    assert_exit(&out, 1);
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("sieve"));
}

#[test]
fn corrupt_cache_is_a_data_error() {
    let dir = tempdir().unwrap();
    let cache = dir.path().join("bad.bin");
    std::fs::write(&cache, b"XXXX not a cache").unwrap();
    let out = run(&[
        "census",
        "--cache",
        cache.to_str().unwrap(),
        "--count",
        "100",
    ]);
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("magic"));
}

#[test]
fn flag_range_violations_are_usage_errors() {
    assert_exit(
        &run(&["bias-sweep", "--rates", "0.4,0.5", "--count", "10"]),
        1,
    );
    assert_exit(
        &run(&["mixed", "--fractions", "0.2,1.5", "--count", "10"]),
        1,
    );
    assert_exit(&run(&["bases", "--bases", "3", "--count", "10"]), 1);
    assert_exit(&run(&["chebyshev", "--sizes", "7", "--count", "10"]), 1);
    assert_exit(&run(&["sweep", "--sizes", "200,100", "--count", "10"]), 1);
    assert_exit(&run(&["sweep", "--source", "noise", "--count", "10"]), 1);
    assert_exit(
        &run(&["modexp", "--pool", "5", "--subset", "9", "--count", "10"]),
        1,
    );
    assert_exit(&run(&["distinguish", "--count", "10"]), 1); // neither source nor input
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for target in [&a, &b] {
        let out = run(&[
            "sweep",
            "--source",
            "random-odd",
            "--count",
            "100",
            "--sizes",
            "50,100",
            "--trials",
            "20",
            "--out",
            target.to_str().unwrap(),
        ]);
        assert_exit(&out, 0);
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b);
    assert!(bytes_a.starts_with(b"# sodp sweep source=random-odd"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let base = run(&[
        "chebyshev",
        "--count",
        "200",
        "--sizes",
        "20,40",
        "--trials",
        "10",
    ]);
    assert_exit(&base, 0);
    let single = run(&[
        "chebyshev",
        "--count",
        "200",
        "--sizes",
        "20,40",
        "--trials",
        "10",
        "--threads",
        "1",
    ]);
    assert_exit(&single, 0);
    assert_eq!(stdout(&base), stdout(&single));
}

#[test]
fn sweep_csv_has_the_pinned_schema() {
    let out = run(&[
        "sweep",
        "--source",
        "primes",
        "--count",
        "500",
        "--sizes",
        "100,200,400,800",
        "--trials",
        "10",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# sodp sweep"));
    assert_eq!(
        lines.next().unwrap(),
        "axis,axis_value,sample_size,trials,avg_even,expectation,std_dev,z_score,z_signed,chebyshev_bound"
    );
    assert_eq!(lines.clone().count(), 4);
    assert!(lines.all(|l| l.starts_with("sample_size,") && l.split(',').count() == 10));
}

#[test]
fn fit_out_writes_the_fit_table() {
    let dir = tempdir().unwrap();
    let fit = dir.path().join("fit.csv");
    let out = run(&[
        "mixed",
        "--count",
        "500",
        "--fractions",
        "0.1,0.5,0.9",
        "--sample-size",
        "400",
        "--trials",
        "10",
        "--fit-out",
        fit.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let text = std::fs::read_to_string(&fit).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("kind,c2,c1,c0"));
    assert!(text.lines().nth(2).unwrap().starts_with("linear,"));
}

#[test]
fn plot_data_duplicates_the_sweep_table() {
    let dir = tempdir().unwrap();
    let main_out = dir.path().join("main.csv");
    let plot = dir.path().join("plot.csv");
    let out = run(&[
        "products",
        "--count",
        "300",
        "--sizes",
        "100,200",
        "--trials",
        "5",
        "--out",
        main_out.to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert_eq!(
        std::fs::read(&main_out).unwrap(),
        std::fs::read(&plot).unwrap()
    );
}

#[test]
fn distinguish_from_input_file() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("numbers.txt");
    // all values have odd digit sums: a maximally biased population
    std::fs::write(&input, "3\n111\n12\n30\n").unwrap();
    let out = run(&[
        "distinguish",
        "--input",
        input.to_str().unwrap(),
        "--sample-size",
        "500",
        "--trials",
        "10",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let row = text.lines().last().unwrap();
    assert!(row.starts_with("Yes,"), "{text}");
}

#[test]
fn distinguish_rejects_malformed_input_files() {
    let dir = tempdir().unwrap();
    let cases: [(&str, &[u8]); 4] = [
        ("blank.txt", b"3\n\n5\n"),
        ("crlf.txt", b"3\r\n5\r\n"),
        ("alpha.txt", b"3\nfive\n"),
        ("negative.txt", b"3\n-5\n"),
    ];
    for (name, bytes) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        let out = run(&[
            "distinguish",
            "--input",
            path.to_str().unwrap(),
            "--sample-size",
            "10",
            "--trials",
            "2",
        ]);
        assert_exit(&out, 2);
    }
    let missing = dir.path().join("missing.txt");
    let out = run(&["distinguish", "--input", missing.to_str().unwrap()]);
    assert_exit(&out, 2);
}

#[test]
fn cache_dir_env_var_provides_the_default_path() {
    let dir = tempdir().unwrap();
    let out = sodp()
        .args(["sieve", "--count", "200"])
        .env("SODP_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let cache = dir.path().join("primes-200.bin");
    assert!(cache.exists());

    let out = sodp()
        .args(["census", "--count", "200"])
        .env("SODP_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("\n200,10,"), "{text}");
}

#[test]
fn sieve_without_any_cache_destination_is_usage_error() {
    let out = sodp()
        .args(["sieve", "--count", "100"])
        .env_remove("SODP_CACHE_DIR")
        .output()
        .unwrap();
    assert_exit(&out, 1);
}

#[test]
fn larger_cache_serves_smaller_counts() {
    let dir = tempdir().unwrap();
    let cache = dir.path().join("p.bin");
    assert_exit(
        &run(&[
            "sieve",
            "--count",
            "1000",
            "--cache",
            cache.to_str().unwrap(),
        ]),
        0,
    );
    let out = run(&[
        "census",
        "--cache",
        cache.to_str().unwrap(),
        "--count",
        "25",
    ]);
    assert_exit(&out, 0);
    // first 25 primes: max 97; odd digit sums {3,5,7,23,29,41,43,47,61,23...}
    let text = stdout(&out);
    let row = text.lines().last().unwrap();
    assert!(row.starts_with("25,10,"), "{text}");

    let out = run(&[
        "census",
        "--cache",
        cache.to_str().unwrap(),
        "--count",
        "2000",
    ]);
    assert_exit(&out, 2); // cache too small is a data error
}

#[test]
fn modexp_reduced_scale_runs() {
    let out = run(&[
        "modexp",
        "--count",
        "1000",
        "--pool",
        "100",
        "--subset",
        "10",
        "--randoms",
        "100",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let row = text.lines().last().unwrap();
    assert!(
        row.starts_with("sample_size,1.0000000000000000e3,1000,1,"),
        "{text}"
    );
}

#[test]
fn bases_sweep_runs_on_even_bases() {
    let out = run(&[
        "bases",
        "--count",
        "300",
        "--bases",
        "2,10,16",
        "--sample-size",
        "200",
        "--trials",
        "5",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("base,")).count(), 3);
}

fn read_to_string(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn distinguish_source_output_schema() {
    let out = run(&[
        "distinguish",
        "--source",
        "primes",
        "--count",
        "100",
        "--sample-size",
        "1000",
        "--trials",
        "20",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# sodp distinguish source=primes"));
    assert_eq!(
        lines.next().unwrap(),
        "verdict,z_avg,p_avg,exp_avg,std_avg,sample_size,trials,threshold"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("Yes,") || row.starts_with("No,"));
}

#[test]
fn metadata_header_never_contains_timestamps() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let out = run(&["census", "--count", "50", "--out", a.to_str().unwrap()]);
    assert_exit(&out, 0);
    std::thread::sleep(std::time::Duration::from_millis(1100));
    let b = dir.path().join("b.csv");
    let out = run(&["census", "--count", "50", "--out", b.to_str().unwrap()]);
    assert_exit(&out, 0);
    assert_eq!(read_to_string(&a), read_to_string(&b));
}
