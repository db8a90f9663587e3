//! Writes a preset scenario to disk and drives the command-line interface
//! against it.

use bm_extension::cli;
use bm_extension::scenario::ScenarioFile;

fn main() -> bm_extension::Result<()> {
    let scenario = ScenarioFile::from_preset("ex215", 8)?;
    let path = std::env::temp_dir().join("bmext-example-ex215.json");
    std::fs::write(&path, scenario.to_json()?)?;
    println!("scenario hash {}", scenario.hash()?);

    let path = path.to_string_lossy().into_owned();
    let runs: [&[&str]; 3] = [
        &["bmext", "validate", &path],
        &["bmext", "--scenario", &path, "--deterministic", "energy", "--function", "tent"],
        &["bmext", "--scenario", &path, "--deterministic", "darn", "--interval", "0"],
    ];
    let mut out = std::io::stdout().lock();
    for args in runs {
        let code = cli::run(args.iter(), &mut out);
        println!("exit code {code}");
    }
    Ok(())
}
