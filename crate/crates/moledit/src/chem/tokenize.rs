//! Lossless SMILES lexer for the organic subset.

use super::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Organic-subset atom, upper case (C, N, O, P, S, B, F, Cl, Br, I).
    Atom,
    /// Aromatic lower-case atom (b, c, n, o, p, s).
    AromaticAtom,
    /// Bracket atom `[...]`, one token including the brackets.
    BracketAtom,
    /// Explicit bond: - = # :
    Bond,
    /// Stereo marker / or \ (lexed, ignored by the parser).
    Stereo,
    /// Ring closure digit 1-9 or %nn.
    RingClosure,
    OpenParen,
    CloseParen,
    /// Component separator.
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesToken {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte span in the source string.
    pub start: usize,
    pub end: usize,
}

/// Token sequence plus the source it came from. Concatenating the lexemes
/// reproduces the source exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesTokenSeq {
    pub tokens: Vec<SmilesToken>,
    pub source: String,
}

impl SmilesTokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lexemes(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.lexeme.as_str()).collect()
    }
}

const TWO_LETTER: [&str; 2] = ["Cl", "Br"];
const ONE_LETTER: [char; 8] = ['B', 'C', 'N', 'O', 'P', 'S', 'F', 'I'];
const AROMATIC: [char; 6] = ['b', 'c', 'n', 'o', 'p', 's'];

/// Lex a SMILES string. Two-letter elements and whole bracket atoms come
/// out as single tokens; every token carries its byte span.
pub fn tokenize_smiles(s: &str) -> Result<SmilesTokenSeq, ChemError> {
    if s.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    if let Some(pos) = s.bytes().position(|b| !b.is_ascii()) {
        return Err(ChemError::IllegalCharacter {
            position: pos,
            found: s[pos..].chars().next().unwrap(),
        });
    }

    let bytes = s.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let (kind, len) = match c {
            '[' => {
                let close = s[i..]
                    .find(']')
                    .ok_or(ChemError::UnterminatedBracket { position: i })?;
                (TokenKind::BracketAtom, close + 1)
            }
            '%' => {
                if i + 2 < bytes.len()
                    && bytes[i + 1].is_ascii_digit()
                    && bytes[i + 2].is_ascii_digit()
                {
                    (TokenKind::RingClosure, 3)
                } else {
                    return Err(ChemError::IllegalCharacter {
                        position: i,
                        found: '%',
                    });
                }
            }
            '1'..='9' => (TokenKind::RingClosure, 1),
            '-' | '=' | '#' | ':' => (TokenKind::Bond, 1),
            '/' | '\\' => (TokenKind::Stereo, 1),
            '(' => (TokenKind::OpenParen, 1),
            ')' => (TokenKind::CloseParen, 1),
            '.' => (TokenKind::Dot, 1),
            _ if TWO_LETTER.iter().any(|e| s[i..].starts_with(e)) => (TokenKind::Atom, 2),
            _ if ONE_LETTER.contains(&c) => (TokenKind::Atom, 1),
            _ if AROMATIC.contains(&c) => (TokenKind::AromaticAtom, 1),
            _ => {
                return Err(ChemError::IllegalCharacter {
                    position: i,
                    found: c,
                })
            }
        };
        tokens.push(SmilesToken {
            kind,
            lexeme: s[i..i + len].to_string(),
            start: i,
            end: i + len,
        });
        i += len;
    }

    Ok(SmilesTokenSeq {
        tokens,
        source: s.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize_smiles(s).unwrap().tokens.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn ethanol_is_three_atom_tokens() {
        let seq = tokenize_smiles("CCO").unwrap();
        assert_eq!(seq.lexemes(), vec!["C", "C", "O"]);
        assert!(seq.tokens.iter().all(|t| t.kind == TokenKind::Atom));
    }

    #[test]
    fn acyl_chloride_lexes_chlorine_as_one_token() {
        let seq = tokenize_smiles("C(Cl)=O").unwrap();
        assert_eq!(seq.lexemes(), vec!["C", "(", "Cl", ")", "=", "O"]);
    }

    #[test]
    fn unterminated_bracket_is_an_error() {
        let err = tokenize_smiles("C[").unwrap_err();
        assert_eq!(err, ChemError::UnterminatedBracket { position: 1 });
        // a closed bracket with arbitrary content lexes fine
        assert!(tokenize_smiles("C[NH4+]").is_ok());
    }

    #[test]
    fn round_trip_concatenation_reproduces_source() {
        for s in ["CCO", "C(Cl)=O", "c1ccccc1", "C[NH4+]C", "C%12CC%12", "C/C=C\\C", "CC.OC"] {
            let seq = tokenize_smiles(s).unwrap();
            let joined: String = seq.lexemes().concat();
            assert_eq!(joined, s);
            for t in &seq.tokens {
                assert_eq!(&s[t.start..t.end], t.lexeme);
            }
        }
    }

    #[test]
    fn ring_closure_forms() {
        assert_eq!(
            kinds("C1CC1"),
            vec![
                TokenKind::Atom,
                TokenKind::RingClosure,
                TokenKind::Atom,
                TokenKind::Atom,
                TokenKind::RingClosure
            ]
        );
        let seq = tokenize_smiles("C%10CC%10").unwrap();
        assert_eq!(seq.tokens[1].lexeme, "%10");
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize_smiles("CCx").unwrap_err();
        assert_eq!(
            err,
            ChemError::IllegalCharacter {
                position: 2,
                found: 'x'
            }
        );
    }

    #[test]
    fn empty_and_non_ascii_are_rejected() {
        assert_eq!(tokenize_smiles("").unwrap_err(), ChemError::EmptyInput);
        assert!(matches!(
            tokenize_smiles("Cé").unwrap_err(),
            ChemError::IllegalCharacter { position: 1, .. }
        ));
    }
}
