//! CoNLL-X-style column I/O. Consumed columns: ID (1), FORM (2), POS (4 by
//! default, 5 optionally), HEAD (7). All other columns pass through as "_".

use std::io::{BufRead, Write};

use super::{ParseTree, Sentence, Token};
use crate::error::{Error, Result};

/// Which column the POS tag is read from (1-based).
pub const POS_COLUMN_DEFAULT: usize = 4;

pub fn read_conll<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    read_conll_with(reader, POS_COLUMN_DEFAULT)
}

pub fn read_conll_with<R: BufRead>(reader: R, pos_column: usize) -> Result<Vec<Sentence>> {
    assert!(pos_column == 4 || pos_column == 5, "POS column must be 4 or 5");
    let mut sentences = Vec::new();
    let mut rows: Vec<(usize, Token, Option<usize>)> = Vec::new(); // (line, token, raw head)
    let mut first_line = 0usize;

    let mut flush = |rows: &mut Vec<(usize, Token, Option<usize>)>, first_line: usize| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let n = rows.len();
        let mut tokens = Vec::with_capacity(n);
        for (line, token, head) in rows.drain(..) {
            if let Some(h) = head {
                if h > n {
                    return Err(Error::parse(line, format!("HEAD {h} out of range 0..={n}")));
                }
                if h == tokens.len() + 1 {
                    return Err(Error::parse(line, "token is its own HEAD"));
                }
            }
            let mut t = token;
            t.gold_head = head;
            tokens.push(t);
        }
        sentences.push(Sentence::new(tokens).map_err(|e| Error::parse(first_line, e.to_string()))?);
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            flush(&mut rows, first_line)?;
            continue;
        }
        let cols: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        if cols.len() < 7 {
            return Err(Error::parse(lineno, format!("expected >= 7 columns, found {}", cols.len())));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer ID `{}`", cols[0])))?;
        if rows.is_empty() {
            first_line = lineno;
        }
        if id != rows.len() + 1 {
            return Err(Error::parse(
                lineno,
                format!("ID {id} breaks the 1..n sequence (expected {})", rows.len() + 1),
            ));
        }
        let form = cols[1];
        let pos = cols[pos_column - 1];
        let head = match cols[6] {
            "_" => None,
            raw => Some(
                raw.parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("non-integer HEAD `{raw}`")))?,
            ),
        };
        let token = Token::new(form, pos, None).map_err(|e| Error::parse(lineno, e.to_string()))?;
        rows.push((lineno, token, head));
    }
    flush(&mut rows, first_line)?;
    Ok(sentences)
}

pub fn write_conll<W: Write>(trees: &[ParseTree], sentences: &[Sentence], mut writer: W) -> Result<()> {
    if trees.len() != sentences.len() {
        return Err(Error::LengthMismatch(format!(
            "{} trees vs {} sentences",
            trees.len(),
            sentences.len()
        )));
    }
    for (tree, sent) in trees.iter().zip(sentences) {
        if tree.len() != sent.len() {
            return Err(Error::LengthMismatch(format!(
                "tree of length {} vs sentence of length {}",
                tree.len(),
                sent.len()
            )));
        }
        for m in 1..=sent.len() {
            let t = sent.token(m);
            writeln!(
                writer,
                "{}\t{}\t_\t{}\t{}\t_\t{}\t_\t_\t_",
                m,
                t.form,
                t.pos,
                t.pos,
                tree.head(m)
            )?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const TWO_TOKENS: &str = "1\tHe\t_\tPRP\tPRP\t_\t2\t_\t_\t_\n2\truns\t_\tVBZ\tVBZ\t_\t0\t_\t_\t_\n\n";

    #[test]
    fn reads_two_token_record() {
        let sents = read_conll(Cursor::new(TWO_TOKENS)).unwrap();
        assert_eq!(sents.len(), 1);
        let s = &sents[0];
        assert_eq!(s.len(), 2);
        assert_eq!(s.token(1).form, "He");
        assert_eq!(s.token(1).pos, "PRP");
        assert_eq!(s.token(1).gold_head, Some(2));
        assert_eq!(s.token(2).gold_head, Some(0));
    }

    #[test]
    fn empty_stream_is_empty_list() {
        assert!(read_conll(Cursor::new("")).unwrap().is_empty());
    }

    #[test]
    fn head_out_of_range_names_line() {
        let bad = "1\ta\t_\tX\tX\t_\t3\t_\t_\t_\n2\tb\t_\tX\tX\t_\t0\t_\t_\t_\n";
        match read_conll(Cursor::new(bad)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_id_sequence_rejected() {
        let bad = "1\ta\t_\tX\tX\t_\t0\t_\t_\t_\n3\tb\t_\tX\tX\t_\t1\t_\t_\t_\n";
        assert!(matches!(read_conll(Cursor::new(bad)), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_head_is_none() {
        let s = "1\ta\t_\tX\tX\t_\t_\t_\t_\t_\n";
        let sents = read_conll(Cursor::new(s)).unwrap();
        assert_eq!(sents[0].token(1).gold_head, None);
    }

    #[test]
    fn space_separated_accepted() {
        let s = "1 He _ PRP PRP _ 2 _ _ _\n2 runs _ VBZ VBZ _ 0 _ _ _\n";
        let sents = read_conll(Cursor::new(s)).unwrap();
        assert_eq!(sents[0].gold_heads().unwrap(), vec![2, 0]);
    }

    #[test]
    fn write_then_read_round_trips() {
        let sents = read_conll(Cursor::new(TWO_TOKENS)).unwrap();
        let tree = ParseTree::new(vec![2, 0]).unwrap();
        let mut buf = Vec::new();
        write_conll(&[tree], &sents, &mut buf).unwrap();
        let back = read_conll(Cursor::new(buf)).unwrap();
        assert_eq!(back, sents);
    }

    #[test]
    fn write_length_mismatch_errors() {
        let sents = read_conll(Cursor::new(TWO_TOKENS)).unwrap();
        let mut buf = Vec::new();
        assert!(write_conll(&[], &sents, &mut buf).is_err());
    }

    #[test]
    fn write_empty_is_empty() {
        let mut buf = Vec::new();
        write_conll(&[], &[], &mut buf).unwrap();
        assert!(buf.is_empty());
    }
}
