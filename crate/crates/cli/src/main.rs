use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlcmd_cli::files::{load_config, open_kb, read_text, save_kb_file};
use nlcmd_cli::repl::{run_repl, ReplOptions};
use nlcmd_cli::service::{serve, AppState};
use nlcmd_cli::CliError;
use nlcmd_core::eval::{parse_corpus, run_corpus};
use nlcmd_core::Engine;

#[derive(Parser)]
#[command(name = "nlcmd", version, about = "Natural-language command interface that learns new phrasings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KbArgs {
    /// Saved knowledge base (JSON).
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Seed-command spec to compile instead of loading --kb.
    #[arg(long)]
    seed_spec: Option<PathBuf>,
    /// TOML file overriding thresholds and budgets.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the learned KB (defaults to --kb).
    #[arg(long)]
    save_kb: Option<PathBuf>,
}

impl KbArgs {
    fn engine(&self) -> Result<Engine, CliError> {
        let config = load_config(self.config.as_deref())?;
        let kb = open_kb(self.kb.as_deref(), self.seed_spec.as_deref())?;
        Engine::new(kb, config).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn save_path(&self) -> Option<&Path> {
        self.save_kb.as_deref().or(self.kb.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Interactive dialogue on stdin/stdout.
    Repl(KbArgs),
    /// HTTP service.
    Serve {
        #[command(flatten)]
        kb: KbArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Run a labelled corpus through simulated dialogues.
    Eval {
        #[command(flatten)]
        kb: KbArgs,
        /// Line-delimited JSON corpus.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        passes: usize,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Compile a seed-command spec into a KB file.
    Compile {
        #[arg(long)]
        seed_spec: PathBuf,
        /// Output KB file.
        #[arg(long)]
        kb: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Repl(args) => {
            let engine = args.engine()?;
            let stdin = std::io::stdin();
            let opts = ReplOptions {
                save_path: args.save_path(),
                prompt: stdin.is_terminal(),
            };
            run_repl(&engine, stdin.lock(), std::io::stdout().lock(), &opts)
        }
        Command::Serve { kb, port } => {
            let engine = kb.engine()?;
            let app = AppState::new(engine, kb.save_path().map(Path::to_path_buf));
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
            rt.block_on(serve(app, port))
        }
        Command::Eval {
            kb,
            corpus,
            passes,
            report,
            json,
        } => {
            let config = load_config(kb.config.as_deref())?;
            let base = open_kb(kb.kb.as_deref(), kb.seed_spec.as_deref())?;
            let items = parse_corpus(&read_text(&corpus)?)?;
            let run = run_corpus(base, &items, &config, passes)?;
            if json {
                print!("{}", run.report.to_json());
            } else {
                print!("{}", run.report.table());
            }
            if let Some(p) = report {
                std::fs::write(&p, run.report.to_json()).map_err(|source| CliError::Io { path: p, source })?;
            }
            // Eval never overwrites its input KB unless asked to.
            if let Some(p) = &kb.save_kb {
                save_kb_file(p, &run.kb)?;
            }
            Ok(())
        }
        Command::Compile { seed_spec, kb } => {
            let compiled = open_kb(None, Some(&seed_spec))?;
            save_kb_file(&kb, &compiled)?;
            let s = compiled.summary();
            println!(
                "compiled {} apis, {} seed commands into {}",
                s.apis.len(),
                compiled.seed_command_count(),
                kb.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
