use clap::Parser;
use plspb::cli::{self, Cli};

fn main() {
    let args = Cli::parse();
    match cli::execute(args.command) {
        Ok(outcome) => {
            for line in outcome.messages {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
