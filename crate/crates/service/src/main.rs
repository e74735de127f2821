use clap::error::ErrorKind;
use clap::Parser;
use sdlstm_service::cli::{run, Cli};
use sdlstm_service::CliError;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return;
        }
        Err(e) => {
            let err = CliError::Usage(
                e.kind().to_string() + ": " + e.to_string().lines().next().unwrap_or(""),
            );
            eprintln!("{}", err.to_json_line());
            std::process::exit(err.exit_code());
        }
    };
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = run(cli, &mut stdout) {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.exit_code());
    }
}
