use clap::Parser;

fn main() {
    let cli = epimacro::cli::Cli::parse();
    match epimacro::cli::run(cli) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
