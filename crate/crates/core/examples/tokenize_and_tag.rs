//! Sentence segmentation, tokenization and the IOB tag codec.
//!
//! ```bash
//! cargo run --release --example tokenize_and_tag
//! ```

use clinical_ner::annotation::{
    decode_iob, encode_iob, repair_tags, EntityMention, EntityTypeSet, Tag,
};
use clinical_ner::text::{tokenize_document, AbbrevList, NormPolicy, RawDocument};

fn main() {
    let doc = RawDocument::new(
        "demo",
        "letter",
        "Dr. Martin saw the patient. Paracétamol 500 mg was given for fever.\n\n\
         Plan:\n\nThe patient was placed on heparin sodium.",
    );
    let text = doc.text.clone();
    let tdoc = tokenize_document(doc, &AbbrevList::default(), &NormPolicy::matching());

    println!("=== Sentences and tokens ===");
    for (i, sent) in tdoc.sentences.iter().enumerate() {
        println!("sentence {i}: {:?}", tdoc.sentence_text(i));
        for t in sent {
            println!(
                "  [{:>3},{:>3}) {:<12} norm={}",
                t.start, t.end, t.surface, t.norm
            );
        }
    }

    // Encode a gold mention over the last sentence.
    let types = EntityTypeSet::new(["DRUG"]).unwrap();
    let start = text.find("heparin").unwrap();
    // Offsets are character counts; this text is ASCII up to the accented
    // word, so recompute via chars.
    let start = text[..start].chars().count();
    let mention = EntityMention::new("DRUG", start, start + 14, "heparin sodium");
    let last = tdoc.sentences.len() - 1;
    let tags = encode_iob(
        &tdoc.sentences[last],
        std::slice::from_ref(&mention),
        &types,
    )
    .unwrap();

    println!("\n=== IOB encoding of the last sentence ===");
    for (tok, tag) in tdoc.sentences[last].iter().zip(&tags) {
        println!("  {:<12} {}", tok.surface, tag.display(&types));
    }

    let decoded = decode_iob(&text, &tdoc.sentences[last], &tags, &types);
    assert_eq!(decoded, vec![mention]);
    println!("\ndecode(encode(x)) == x  ✓");

    // Malformed sequences are repaired before decoding.
    let stray = vec![Tag::Outside, Tag::Inside(0), Tag::Inside(0)];
    let repaired = repair_tags(&stray);
    println!(
        "repair [O, I-DRUG, I-DRUG] -> {:?}",
        repaired
            .iter()
            .map(|t| t.display(&types))
            .collect::<Vec<_>>()
    );
}
