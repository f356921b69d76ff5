// Encode frame positions as four-digit relative codes and read them back.
//
// ```bash
// cargo run --example position_tokens
// ```

use seqtime::position_token::{decode_index, encode_relative, split_tokens, tokens_to_code, vocabulary};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!("vocabulary: {}", vocabulary().join(" "));

    let code = encode_relative(7, 96)?;
    println!("frame 7 of 96 -> {code} ({})", code.value());
    assert_eq!(code.to_string(), "<0><7><2><9>");

    // Tokens come back from model text as a flat string.
    let parsed = tokens_to_code(&split_tokens("<0><7><2><9>"))?;
    println!("at 60 s that is {:.3} s", parsed.seconds(60.0)?);
    assert_eq!(decode_index(parsed, 96), Some(7));

    for length in [10, 96, 1000] {
        let last = encode_relative(length, length)?;
        println!("last of {length:>4}: {last}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
