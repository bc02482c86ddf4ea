use clap::error::ErrorKind;
use clap::Parser;
use gsa_cli::args::Cli;
use gsa_cli::error::CliError;

fn fail(e: &CliError) -> ! {
    eprintln!("{}", e.record());
    std::process::exit(e.exit_code());
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => fail(&CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Err(e) = gsa_cli::run(cli) {
        fail(&e);
    }
}
