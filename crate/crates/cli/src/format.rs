//! Text rendering of a grounded answer.
//!
//! ```text
//! answer: yes
//! reply: Yes, ibudilast has shown efficacy.
//! seeds: C9100001 (0.7071), C9100003 (0.5000)
//! evidence:
//!   [hop 1 from C9100001] CTRP Terminology subset includes concept Ibudilast.
//!   [hop 2 from C9100001] Multiple sclerosis concept in subset CTRP Terminology.
//! prompt: sha256 <hex>, 12 context words
//! ```
//!
//! Only fragments that made it into the prompt are listed. With no graph
//! context the evidence section reads `evidence: none`.

use std::fmt::Write as _;

use umlskg::rag::GroundedAnswer;

pub fn render_answer(a: &GroundedAnswer) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "answer: {}", a.label);
    let _ = writeln!(out, "reply: {}", a.raw_text.trim());
    if a.context.seeds.is_empty() {
        out.push_str("seeds: none\n");
    } else {
        let seeds: Vec<String> = a.context.seeds.iter().map(|s| format!("{} ({:.4})", s.cui, s.score)).collect();
        let _ = writeln!(out, "seeds: {}", seeds.join(", "));
    }
    if a.prompt.retained.is_empty() {
        out.push_str("evidence: none\n");
    } else {
        out.push_str("evidence:\n");
        for &i in &a.prompt.retained {
            let path = &a.context.paths[i];
            let _ = writeln!(out, "  [hop {} from {}] {}", path.hop, path.seed, a.context.fragments[i].text);
        }
    }
    let _ = writeln!(
        out,
        "prompt: sha256 {}, {} context words",
        a.prompt.hash(),
        a.prompt.context_word_count
    );
    out
}
