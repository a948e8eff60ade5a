//! Builds a corpus, writes it as JSONL, reads it back and splits it.

use std::error::Error;

use overlap_check::corpus::{Corpus, Example, Label, Role};

fn main() -> Result<(), Box<dyn Error>> {
    let examples = (0..10)
        .map(|i| {
            let label = if i % 3 == 0 { Label::Positive } else { Label::Negative };
            Example::manual(format!("doc-{i:02}"), format!("article number {i}"), label)
        })
        .collect();
    let corpus = Corpus::new(examples, Role::Labeled)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("labeled.jsonl");
    corpus.save_jsonl(&path)?;
    print!("{}", std::fs::read_to_string(&path)?.lines().take(2).map(|l| format!("{l}\n")).collect::<String>());

    let loaded = Corpus::load_jsonl(&path)?;
    assert_eq!(loaded, corpus);
    println!("round-trip ok: {} examples, role {:?}", loaded.len(), loaded.role());

    // records without a label default to distant supervision
    let pool = Corpus::from_jsonl_str("{\"id\":\"p1\",\"text\":\"unlabelled\"}\n")?;
    println!("inferred role of an unlabelled file: {:?}", pool.role());

    let (train, val, test) = loaded.split(0.6, 0.2, 42)?;
    let ids = |c: &Corpus| c.iter().map(|e| e.id.clone()).collect::<Vec<_>>().join(" ");
    println!("train: {}\nval:   {}\ntest:  {}", ids(&train), ids(&val), ids(&test));
    Ok(())
}
