//! Drive the command line in-process and capture its output.

fn main() {
    let dir = std::env::temp_dir().join(format!("webbundle-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bundle = dir.join("page.web");
    let bundle = bundle.to_str().unwrap();

    let runs: [&[&str]; 4] = [
        &[
            "synth", "--seed", "4", "--size", "small", "--races", "1", "-o", bundle,
        ],
        &["validate", bundle],
        &["diff-har", "--format", "csv", bundle],
        &["query", "api-calls", bundle],
    ];
    for args in runs {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = webbundle::cli::run(
            std::iter::once("webbundle").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        println!("$ webbundle {} -> {code}", args.join(" "));
        print!("{}", String::from_utf8_lossy(&out));
        eprint!("{}", String::from_utf8_lossy(&err));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
