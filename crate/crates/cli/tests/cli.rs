use std::path::Path;
use std::process::{Command, Output};

const BUNDLED: &str = include_str!("../../core/data/premiums.csv");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_byte-premium"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn lookup_reproduces_every_bundled_value() {
    for line in BUNDLED.lines().skip(2) {
        let (lang, value) = line.split_once(',').unwrap();
        assert_eq!(ok(&["lookup", lang, "eng_latn"]).trim(), value, "{lang}");
    }
}

#[test]
fn lookup_spot_values_and_precision() {
    assert_eq!(ok(&["lookup", "mya_mymr", "eng_latn"]).trim(), "5.1034592");
    assert_eq!(ok(&["lookup", "kea_latn", "eng_latn"]).trim(), "0.7821679");
    assert_eq!(ok(&["lookup", "fra_latn", "fra_latn"]).trim(), "1.0");
    let full: f64 = ok(&["lookup", "kat_geor", "fra_latn"])
        .trim()
        .parse()
        .unwrap();
    assert_eq!(full, 4.3381046 / 1.1742064);
    assert_eq!(
        ok(&["lookup", "kat_geor", "fra_latn", "--digits", "3"]).trim(),
        "3.694"
    );
}

#[test]
fn convert_and_rescale() {
    assert_eq!(
        ok(&[
            "convert",
            "--bytes",
            "1000000000",
            "--from",
            "kat_geor",
            "--to",
            "eng_latn"
        ])
        .trim(),
        "230515419"
    );
    assert_eq!(
        ok(&["convert", "--bytes", "12345", "--from", "kat_geor", "--to", "kat_geor"]).trim(),
        "12345"
    );

    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(
        &table,
        "language,byte_premium\neng_latn,1.0\nxaa_latn,4.0\n",
    )
    .unwrap();
    let props = dir.path().join("p.csv");
    std::fs::write(&props, "language,proportion\neng_latn,0.5\nxaa_latn,0.5\n").unwrap();
    let out = ok(&["rescale", p(&props), "--premiums", p(&table)]);
    let values: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(
        (values[0] - 0.8).abs() < 1e-12 && (values[1] - 0.2).abs() < 1e-12,
        "{out}"
    );

    std::fs::write(&props, "language,proportion\neng_latn,0.5\nxyz_latn,0.5\n").unwrap();
    let out = run(&["rescale", p(&props)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("xyz_latn"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["lookup", "eng_latn"]).status.code(), Some(1));
    assert_eq!(
        run(&["lookup", "english", "eng_latn"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));

    let unknown = run(&["lookup", "xyz_latn", "eng_latn"]);
    assert_eq!(unknown.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&unknown.stderr);
    assert!(
        msg.contains("parallel text") && msg.contains("monolingual"),
        "{msg}"
    );

    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    std::fs::write(
        &obs,
        "lang_a,lang_b,premium,n_segments\naaa_latn,eng_latn,2.0,10\neng_latn,aaa_latn,0.3,10\nbbb_latn,aaa_latn,1.4,10\n",
    )
    .unwrap();
    assert_eq!(
        run(&["fit", p(&obs), "--max-iters", "0"]).status.code(),
        Some(3)
    );
    let fitted = ok(&["fit", p(&obs)]);
    assert!(
        fitted.starts_with("# source=fitted-raw-mse reference=eng_latn\nlanguage,byte_premium\n"),
        "{fitted}"
    );

    std::fs::write(
        &obs,
        "lang_a,lang_b,premium,n_segments\naaa_latn,eng_latn,2.0,10\nbbb_latn,ccc_latn,1.4,10\n",
    )
    .unwrap();
    let out = run(&["fit", p(&obs)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnected"));
}

#[test]
fn parallel_text_for_a_novel_language() {
    let dir = tempfile::tempdir().unwrap();
    let (novel, known) = (dir.path().join("n.txt"), dir.path().join("k.txt"));
    let lines: Vec<String> = (0..30).map(|i| format!("sentence {i:03}")).collect();
    std::fs::write(&known, lines.join("\n")).unwrap();
    std::fs::write(
        &novel,
        lines
            .iter()
            .map(|l| l.repeat(2))
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();
    let args = [
        "lookup",
        "xyz_latn",
        "eng_latn",
        "--parallel-text",
        p(&novel),
        "--parallel-known",
        "eng_latn",
        "--parallel-known-text",
        p(&known),
    ];
    let out = run(&args);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "2.0");
    assert!(String::from_utf8_lossy(&out.stderr).contains("method: parallel"));
}

#[test]
fn corpus_pipeline_and_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("c.tsv");
    // Second column spells é decomposed (3 bytes); NFC composes it (2 bytes).
    let mut text = String::from("eng_latn\tfra_latn\tdeu_latn\n");
    for i in 0..10 {
        text.push_str(&format!("caf{i}\tcafe\u{301}{i}\tcafe{i}\n"));
    }
    std::fs::write(&tsv, &text).unwrap();

    let raw = ok(&["compute-multiparallel", p(&tsv)]);
    assert!(raw.contains("fra_latn,1.75\n"), "{raw}");
    let nfc = ok(&["compute-multiparallel", p(&tsv), "--normalize", "nfc"]);
    assert!(nfc.contains("fra_latn,1.5\n"), "{nfc}");
    let sampled = ok(&["compute-multiparallel", p(&tsv), "--sample", "3"]);
    assert!(
        sampled.starts_with("# source=multiparallel reference=eng_latn rows=3\n"),
        "{sampled}"
    );

    let gz = ok(&["compress-analyze", p(&tsv)]);
    assert!(gz.starts_with("language,byte_premium,compressed_premium\n"));
    assert!(gz.contains("eng_latn,1.0,1.0\n"), "{gz}");

    let gt = dir.path().join("gt.csv");
    let out = dir.path().join("premiums.csv");
    ok(&[
        "compute-multiparallel",
        p(&tsv),
        "--output",
        p(&out),
        "--ground-truth",
        p(&gt),
        "--source",
        "flores",
    ]);
    assert!(std::fs::read_to_string(&gt).unwrap().contains(",FLORES\n"));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), raw);

    let table = ok(&["validate", p(&gt), "--variants", "III"]);
    assert!(table.contains("Scripts with count >=5"), "{table}");

    let bitext_a = dir.path().join("a.txt");
    let bitext_b = dir.path().join("b.txt");
    std::fs::write(&bitext_a, "aa\naaaa\n").unwrap();
    std::fs::write(&bitext_b, "a\naa\n").unwrap();
    let row = ok(&[
        "compute-pairwise",
        "--lang-a",
        "aaa_latn",
        "--lang-b",
        "bbb_latn",
        "--text-a",
        p(&bitext_a),
        "--text-b",
        p(&bitext_b),
    ]);
    assert_eq!(
        row,
        "lang_a,lang_b,premium,n_segments\naaa_latn,bbb_latn,2.0,2\n"
    );
}

#[test]
fn regression_suite_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.csv");
    let mut csv = String::from("language,length_ratio,byte_premium,bytes_per_char,char_entropy,script_type,family,source_dataset\n");
    let scripts = ["latn", "cyrl", "arab", "deva"];
    let types = ["alphabet", "alphabet", "abjad", "abugida"];
    for i in 0..24 {
        let h = 3.0 + (i as f64) * 0.1;
        let lr = 0.4 + 0.1 * h + 0.01 * (i % 4) as f64;
        let bpc = 1.0 + (i % 4) as f64 * 0.5;
        let code = format!(
            "r{}{}",
            (b'a' + (i / 26) as u8) as char,
            (b'a' + (i % 26) as u8) as char
        );
        csv.push_str(&format!(
            "{code}_{},{lr},{},{bpc},{h},{},fam{},NLLB\n",
            scripts[i % 4],
            lr * bpc,
            types[i % 4],
            i % 3
        ));
    }
    csv.push_str("eng_latn,1.0,1.0,1.0,4.2,alphabet,fam0,NLLB\n");
    std::fs::write(&gt, csv).unwrap();
    let suite = dir.path().join("suite.json");
    ok(&["fit-regression", p(&gt), "--output", p(&suite)]);
    let out = ok(&[
        "predict",
        "--suite",
        p(&suite),
        "--entropy",
        "4.0",
        "--bytes-per-char",
        "1.0",
        "--script-type",
        "alphabet",
        "--script",
        "latn",
        "--family",
        "fam1",
    ]);
    assert!(out.contains("variant\tI\n"), "{out}");
    let out = ok(&[
        "predict",
        "--suite",
        p(&suite),
        "--entropy",
        "4.0",
        "--bytes-per-char",
        "1.0",
        "--script-type",
        "alphabet",
    ]);
    assert!(out.contains("variant\tIII\n"), "{out}");
    let json = ok(&["validate", p(&gt), "--json"]);
    assert!(json.trim_start().starts_with('{'));
}

#[test]
fn ground_truth_from_tables_and_texts() {
    let dir = tempfile::tempdir().unwrap();
    let premiums = dir.path().join("bp.csv");
    let ratios = dir.path().join("lr.csv");
    std::fs::write(
        &premiums,
        "language,byte_premium\neng_latn,1.0\nrus_cyrl,1.8\nkat_geor,4.3\n",
    )
    .unwrap();
    std::fs::write(
        &ratios,
        "language,byte_premium\neng_latn,1.0\nrus_cyrl,1.02\nkat_geor,1.1\n",
    )
    .unwrap();
    let texts = dir.path().join("texts");
    std::fs::create_dir(&texts).unwrap();
    std::fs::write(texts.join("eng_latn.txt"), "abc\nab\n").unwrap();
    std::fs::write(texts.join("rus_cyrl.txt"), "абв\nаб\n").unwrap();
    let out = run(&[
        "ground-truth",
        "--byte-premiums",
        p(&premiums),
        "--length-ratios",
        p(&ratios),
        "--texts",
        p(&texts),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("kat_geor"));
    let csv = stdout(&out);
    assert!(csv.contains("rus_cyrl,1.02,1.8,2.0,"), "{csv}");
    assert!(csv.contains(",alphabet,Indo-European,NLLB\n"), "{csv}");
    assert!(!csv.contains("kat_geor"));

    // Several files are merged; duplicates resolved by dataset priority.
    let gt = dir.path().join("gt.csv");
    std::fs::write(&gt, &csv).unwrap();
    let out = run(&["validate", p(&gt), p(&gt), "--variants", "III"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3 languages"));
}
