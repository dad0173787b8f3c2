//! Line-oriented terminal dialogue. Each input line is one user turn;
//! agent turns print as `Bot: ...` with option lists on following lines.

use std::io::{BufRead, Write};
use std::path::Path;

use nlcmd_core::agent::system_now_ms;
use nlcmd_core::dialogue::DialogueError;
use nlcmd_core::{Engine, TurnReport};

use crate::files::save_kb_file;
use crate::CliError;

pub struct ReplOptions<'a> {
    /// Where `:save` and a clean exit write the KB.
    pub save_path: Option<&'a Path>,
    /// Print a `> ` prompt before each line.
    pub prompt: bool,
}

pub fn run_repl(
    engine: &Engine,
    input: impl BufRead,
    mut out: impl Write,
    opts: &ReplOptions<'_>,
) -> Result<(), CliError> {
    let write_err = |e: std::io::Error| CliError::Runtime(format!("cannot write output: {e}"));
    let mut session = engine.new_session();
    let mut lines = input.lines();
    loop {
        if opts.prompt {
            write!(out, "> ").map_err(write_err)?;
            out.flush().map_err(write_err)?;
        }
        let Some(line) = lines.next() else { break };
        let line = line.map_err(|e| CliError::Runtime(format!("cannot read input: {e}")))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match text {
            ":quit" | ":q" => break,
            ":save" => {
                match opts.save_path {
                    Some(p) => {
                        save_kb_file(p, &engine.snapshot())?;
                        engine.take_dirty();
                        writeln!(out, "Saved knowledge base to {}.", p.display())
                    }
                    None => writeln!(out, "No save path: start with --kb or --save-kb."),
                }
                .map_err(write_err)?;
                continue;
            }
            ":kb" => {
                write!(out, "{}", kb_listing(engine)).map_err(write_err)?;
                continue;
            }
            ":help" => {
                writeln!(out, "Type a command, or :kb, :save, :quit.").map_err(write_err)?;
                continue;
            }
            _ => {}
        }
        match engine.turn(&mut session, text, system_now_ms()) {
            Ok(report) => print_report(&mut out, &report).map_err(write_err)?,
            Err(DialogueError::InvalidOptionIndex { count, .. }) => {
                writeln!(out, "Bot: Please answer with an option number from 1 to {count}, or none.")
                    .map_err(write_err)?
            }
            Err(e) => return Err(CliError::Runtime(e.to_string())),
        }
    }
    if let Some(p) = opts.save_path {
        if engine.take_dirty() {
            save_kb_file(p, &engine.snapshot())?;
        }
    }
    Ok(())
}

pub fn print_report(out: &mut impl Write, report: &TurnReport) -> std::io::Result<()> {
    let lines = report.action.body().lines();
    for (i, line) in lines.iter().enumerate() {
        if i == 0 {
            writeln!(out, "Bot: {line}")?;
        } else {
            writeln!(out, "{line}")?;
        }
    }
    if let (Some(c), Some(ep)) = (&report.commit, &report.episode) {
        if let (Some(_), Some(t)) = (&c.added_sc, &c.template) {
            writeln!(out, "Bot: Learned [{t}] for {}.", ep.resolved_api)?;
        }
        for (ty, v) in &c.added_values {
            writeln!(out, "Bot: Learned new {ty} \"{v}\".")?;
        }
    }
    if let Some(s) = report.surprise.as_ref().filter(|s| s.surprising) {
        writeln!(
            out,
            "Bot: (unusual: {} rarely follows {}, p={:.3})",
            s.api_id, s.context, s.probability
        )?;
    }
    Ok(())
}

fn kb_listing(engine: &Engine) -> String {
    let s = engine.snapshot().summary();
    let mut text = format!("KB version {}, {} learned seed commands\n", s.version, s.learned_sc_count);
    for api in &s.apis {
        text.push_str(&format!(
            "  {}: {} authored, {} learned\n",
            api.api_id, api.authored_scs, api.learned_scs
        ));
        for t in &api.learned_templates {
            text.push_str(&format!("    [{}]\n", t.template));
        }
    }
    text
}
