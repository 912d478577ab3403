//! Newick parsing and serialization, plus tree-sample input: one statement
//! per line, or a Nexus TREES block with an optional translate table.

use std::collections::BTreeMap;

use super::{Node, Phylogeny, TreeError};

/// Parses one `;`-terminated Newick statement. Quoted labels (with `''` as
/// the escape for a quote) and square-bracket comments are supported; labels
/// are preserved exactly, including underscores.
pub fn parse_newick(text: &str) -> Result<Phylogeny, TreeError> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let mut nodes = Vec::new();
    parser.subtree(&mut nodes, None)?;
    parser.trivia();
    if parser.bump() != Some(';') {
        return Err(parser.err("expected `;`"));
    }
    parser.trivia();
    if parser.pos < parser.chars.len() {
        return Err(parser.err("trailing content after `;`"));
    }
    Phylogeny::from_arena(nodes)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn err(&self, msg: impl Into<String>) -> TreeError {
        TreeError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    /// Skips whitespace and (nested) square-bracket comments.
    fn trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.pos += 1;
                }
                Some('[') => {
                    let mut depth = 0usize;
                    while let Some(c) = self.bump() {
                        match c {
                            '[' => depth += 1,
                            ']' => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn subtree(
        &mut self,
        nodes: &mut Vec<Node>,
        parent: Option<usize>,
    ) -> Result<usize, TreeError> {
        self.trivia();
        let id = nodes.len();
        nodes.push(Node {
            parent,
            children: Vec::new(),
            label: None,
            length: None,
        });
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                let child = self.subtree(nodes, Some(id))?;
                nodes[id].children.push(child);
                self.trivia();
                match self.bump() {
                    Some(',') => continue,
                    Some(')') => break,
                    Some(c) => return Err(self.err(format!("expected `,` or `)`, found `{c}`"))),
                    None => return Err(self.err("unbalanced parentheses")),
                }
            }
            self.trivia();
            let label = self.label()?;
            if !label.is_empty() {
                nodes[id].label = Some(label);
            }
        } else {
            let label = self.label()?;
            if label.is_empty() {
                return Err(self.err("expected a tip label"));
            }
            nodes[id].label = Some(label);
        }
        self.trivia();
        if self.peek() == Some(':') {
            self.pos += 1;
            nodes[id].length = Some(self.length()?);
        } else if parent.is_some() {
            return Err(self.err("missing branch length"));
        }
        Ok(id)
    }

    fn label(&mut self) -> Result<String, TreeError> {
        self.trivia();
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut out = String::new();
            loop {
                match self.bump() {
                    Some('\'') => {
                        if self.peek() == Some('\'') {
                            out.push('\'');
                            self.pos += 1;
                        } else {
                            return Ok(out);
                        }
                    }
                    Some(c) => out.push(c),
                    None => return Err(self.err("unterminated quoted label")),
                }
            }
        }
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || "()[],:;'".contains(c) {
                break;
            }
            out.push(c);
            self.pos += 1;
        }
        Ok(out)
    }

    fn length(&mut self) -> Result<f64, TreeError> {
        self.trivia();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || "+-.eE".contains(c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let value: f64 = text
            .parse()
            .map_err(|_| self.err(format!("invalid branch length `{text}`")))?;
        if !value.is_finite() {
            return Err(self.err(format!("non-finite branch length `{text}`")));
        }
        if value < 0.0 {
            return Err(self.err(format!("negative branch length {value}")));
        }
        Ok(value)
    }
}

fn needs_quoting(label: &str) -> bool {
    label.is_empty()
        || label
            .chars()
            .any(|c| c.is_whitespace() || "()[],:;'".contains(c))
}

pub(super) fn serialize(tree: &Phylogeny) -> String {
    fn write(tree: &Phylogeny, id: usize, out: &mut String) {
        let node = &tree.nodes()[id];
        if !node.children.is_empty() {
            out.push('(');
            for (i, &child) in node.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write(tree, child, out);
            }
            out.push(')');
        }
        if let Some(label) = &node.label {
            if needs_quoting(label) {
                out.push('\'');
                out.push_str(&label.replace('\'', "''"));
                out.push('\'');
            } else {
                out.push_str(label);
            }
        }
        if let Some(length) = node.length {
            out.push(':');
            out.push_str(&format!("{length}"));
        }
    }
    let mut out = String::new();
    write(tree, 0, &mut out);
    out.push(';');
    out
}

/// An ordered posterior sample of trees.
#[derive(Clone, Debug)]
pub struct TreeSample {
    trees: Vec<Phylogeny>,
}

impl TreeSample {
    pub fn new(trees: Vec<Phylogeny>) -> Result<Self, TreeError> {
        if trees.is_empty() {
            return Err(TreeError::NoTrees);
        }
        Ok(Self { trees })
    }

    pub fn trees(&self) -> &[Phylogeny] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Parses either one Newick statement per line (blank lines ignored) or a
/// Nexus file with a TREES block. File order is preserved.
pub fn parse_tree_sample(text: &str) -> Result<TreeSample, TreeError> {
    let trees = if text.trim_start().to_ascii_lowercase().starts_with("#nexus") {
        parse_nexus(text)?
    } else {
        let mut trees = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let tree = parse_newick(line).map_err(|e| TreeError::AtLine {
                line: i + 1,
                source: Box::new(e),
            })?;
            trees.push(tree);
        }
        trees
    };
    TreeSample::new(trees)
}

/// Splits text into `;`-terminated statements with comments removed and
/// quotes preserved, tagging each with its starting line.
fn split_statements(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start_line = 1;
    let mut line = 1;
    let mut depth = 0usize;
    let mut in_quote = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\n' {
            line += 1;
        }
        if in_quote {
            cur.push(c);
            if c == '\'' {
                if chars.peek() == Some(&'\'') {
                    cur.push(chars.next().unwrap());
                } else {
                    in_quote = false;
                }
            }
            continue;
        }
        if depth > 0 {
            match c {
                '[' => depth += 1,
                ']' => depth -= 1,
                _ => {}
            }
            continue;
        }
        match c {
            '[' => depth = 1,
            ';' => {
                if !cur.trim().is_empty() {
                    out.push((start_line, std::mem::take(&mut cur)));
                } else {
                    cur.clear();
                }
            }
            '\'' => {
                if cur.trim().is_empty() {
                    start_line = line;
                }
                in_quote = true;
                cur.push(c);
            }
            _ => {
                if !c.is_whitespace() && cur.trim().is_empty() {
                    start_line = line;
                }
                cur.push(c);
            }
        }
    }
    out
}

fn unquote(name: &str) -> String {
    let name = name.trim();
    if name.len() >= 2 && name.starts_with('\'') && name.ends_with('\'') {
        name[1..name.len() - 1].replace("''", "'")
    } else {
        name.to_string()
    }
}

fn parse_translate(stmt: &str) -> Vec<(String, String)> {
    // Drop the `translate` keyword, whatever its case.
    let stmt = stmt.trim_start();
    let head: usize = stmt
        .chars()
        .take_while(|c| !c.is_whitespace())
        .map(char::len_utf8)
        .sum();
    let body = &stmt[head..];
    // Split on commas outside quotes.
    let mut pieces = Vec::new();
    let mut cur = String::new();
    let mut in_quote = false;
    for c in body.chars() {
        match c {
            '\'' => {
                in_quote = !in_quote;
                cur.push(c);
            }
            ',' if !in_quote => pieces.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    pieces.push(cur);
    pieces
        .iter()
        .filter_map(|piece| {
            let piece = piece.trim();
            let key: String = piece.chars().take_while(|c| !c.is_whitespace()).collect();
            let value = piece[key.len()..].trim();
            (!key.is_empty() && !value.is_empty()).then(|| (key, unquote(value)))
        })
        .collect()
}

fn parse_nexus(text: &str) -> Result<Vec<Phylogeny>, TreeError> {
    // Drop the `#NEXUS` marker; it is not `;`-terminated.
    let trimmed = text.trim_start();
    let body = trimmed
        .get(..6)
        .filter(|p| p.eq_ignore_ascii_case("#nexus"))
        .map_or(trimmed, |_| &trimmed[6..]);
    let mut trees = Vec::new();
    let mut translate: BTreeMap<String, String> = BTreeMap::new();
    let mut in_trees = false;
    for (line, stmt) in split_statements(body) {
        let words: Vec<String> = stmt
            .split_whitespace()
            .take(2)
            .map(|w| w.to_ascii_lowercase())
            .collect();
        let head = words.first().map(String::as_str).unwrap_or("");
        if !in_trees {
            if head == "begin" && words.get(1).map(String::as_str) == Some("trees") {
                in_trees = true;
            }
            continue;
        }
        match head {
            "end" | "endblock" => break,
            "translate" => {
                translate = parse_translate(&stmt).into_iter().collect();
            }
            "tree" => {
                let eq = stmt.find('=').ok_or(TreeError::AtLine {
                    line,
                    source: Box::new(TreeError::Parse {
                        pos: 0,
                        msg: "tree statement without `=`".into(),
                    }),
                })?;
                let newick_text = format!("{};", &stmt[eq + 1..]);
                let tree = parse_newick(&newick_text).map_err(|e| TreeError::AtLine {
                    line,
                    source: Box::new(e),
                })?;
                let tree = if translate.is_empty() {
                    tree
                } else {
                    tree.rename_tips(|l| {
                        translate.get(l).cloned().unwrap_or_else(|| l.to_string())
                    })?
                };
                trees.push(tree);
            }
            _ => {}
        }
    }
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_tip_tree() {
        let tree = parse_newick("((A:1,B:1):1,C:2);").unwrap();
        assert_eq!(tree.n_tips(), 3);
        assert_eq!(tree.tip_labels(), ["A", "B", "C"]);
        assert_eq!(tree.nodes()[0].children.len(), 2);
    }

    #[test]
    fn round_trips_exactly() {
        for text in [
            "((A:1,B:1):1,C:2);",
            "(A:0.125,B:0.001);",
            "((A:1,B:1)anc:1,C:2);",
            "('a b':1,'it''s':2);",
            "((A:1,B:1):1);",
        ] {
            let tree = parse_newick(text).unwrap();
            assert_eq!(tree.to_newick(), text);
        }
        // Scientific notation parses but serializes in plain decimal form.
        let tree = parse_newick("(A:0.125,B:1e-3);").unwrap();
        assert_eq!(tree.to_newick(), "(A:0.125,B:0.001);");
    }

    #[test]
    fn skips_comments_and_whitespace() {
        let tree = parse_newick("[&R] ( A : 1 , [why] B:2 ) ;").unwrap();
        assert_eq!(tree.tip_labels(), ["A", "B"]);
        assert_eq!(tree.to_newick(), "(A:1,B:2);");
    }

    #[test]
    fn duplicate_tips_are_rejected() {
        assert!(matches!(
            parse_newick("((A:1,A:1):1,C:2);"),
            Err(TreeError::DuplicateTip(l)) if l == "A"
        ));
    }

    #[test]
    fn unbalanced_parentheses_are_rejected() {
        assert!(parse_newick("((A:1,B:1):1;").is_err());
        assert!(parse_newick("(A:1,B:1)):1;").is_err());
    }

    #[test]
    fn missing_semicolon_is_rejected() {
        assert!(parse_newick("(A:1,B:1)").is_err());
    }

    #[test]
    fn negative_length_is_rejected() {
        assert!(matches!(
            parse_newick("(A:-1,B:1);"),
            Err(TreeError::Parse { msg, .. }) if msg.contains("negative")
        ));
    }

    #[test]
    fn missing_length_is_rejected() {
        assert!(matches!(
            parse_newick("(A,B:1);"),
            Err(TreeError::Parse { msg, .. }) if msg.contains("length")
        ));
    }

    #[test]
    fn single_tip_is_rejected() {
        assert!(matches!(
            parse_newick("(A:1);"),
            Err(TreeError::TooFewTips(1))
        ));
    }

    #[test]
    fn root_length_round_trips() {
        let tree = parse_newick("(A:1,B:2):0;").unwrap();
        assert_eq!(tree.to_newick(), "(A:1,B:2):0;");
        // The root length is cosmetic: depths are unchanged.
        assert_eq!(tree.vcv().matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn sample_parses_line_per_tree() {
        let sample = parse_tree_sample("(A:1,B:1);\n\n((A:1,B:1):1,C:2);\n").unwrap();
        assert_eq!(sample.len(), 2);
        assert_eq!(sample.trees()[1].n_tips(), 3);
    }

    #[test]
    fn sample_reports_failing_line() {
        match parse_tree_sample("(A:1,B:1);\n(A:1,B;\n") {
            Err(TreeError::AtLine { line: 2, .. }) => {}
            other => panic!("expected line-2 error, got {other:?}"),
        }
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(parse_tree_sample("\n\n"), Err(TreeError::NoTrees)));
    }

    #[test]
    fn nexus_trees_block_with_translate() {
        let text = "#NEXUS\nbegin taxa;\ndimensions ntax=3;\nend;\nbegin trees;\n\
translate\n  1 Alpha,\n  2 'Beta prime',\n  3 Gamma;\n\
tree STATE_0 = [&R] ((1:1,2:1):1,3:2);\ntree STATE_1 = (1:1,(2:1,3:1):1);\nend;\n";
        let sample = parse_tree_sample(text).unwrap();
        assert_eq!(sample.len(), 2);
        assert_eq!(
            sample.trees()[0].tip_labels(),
            ["Alpha", "Beta prime", "Gamma"]
        );
        assert_eq!(
            sample.trees()[1].tip_labels(),
            ["Alpha", "Beta prime", "Gamma"]
        );
    }

    #[test]
    fn nexus_without_translate() {
        let text = "#NEXUS\nBEGIN TREES;\nTREE one = ((A:1,B:1):1,C:2);\nEND;\n";
        let sample = parse_tree_sample(text).unwrap();
        assert_eq!(sample.len(), 1);
        assert_eq!(sample.trees()[0].tip_labels(), ["A", "B", "C"]);
    }

    #[test]
    fn nexus_reports_statement_line() {
        let text = "#NEXUS\nbegin trees;\ntree a = (A:1,B:1);\ntree b = (A:1,B;\nend;\n";
        match parse_tree_sample(text) {
            Err(TreeError::AtLine { line: 4, .. }) => {}
            other => panic!("expected line-4 error, got {other:?}"),
        }
    }
}
