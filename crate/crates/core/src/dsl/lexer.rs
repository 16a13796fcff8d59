use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Comma,
    Arrow,
    Define,
    Tilde,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Arrow => "->",
            Tok::Define => ":=",
            Tok::Tilde => "~",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let (mut line, mut column) = (1, 1);
    // last non-blank character, where end of input is reported
    let mut last = Pos { line: 1, column: 1 };
    while let Some(&(start, c)) = chars.peek() {
        let pos = Pos { line, column };
        let advance = |line: &mut usize, column: &mut usize, c: char| {
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
        };
        if c.is_whitespace() {
            chars.next();
            advance(&mut line, &mut column, c);
            continue;
        }
        last = pos;
        if c == '#' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                last = Pos { line, column };
                chars.next();
                advance(&mut line, &mut column, c);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = i + c.len_utf8();
                    last = Pos { line, column };
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(text[start..end].to_string()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_digit() {
                    end = i + 1;
                    last = Pos { line, column };
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            let value = text[start..end].parse::<i64>().map_err(|_| ParseError {
                line: pos.line,
                column: pos.column,
                message: format!("integer literal `{}` out of range", &text[start..end]),
                expected: Vec::new(),
            })?;
            out.push(Token {
                tok: Tok::Int(value),
                pos,
            });
            continue;
        }
        chars.next();
        column += 1;
        let next = chars.peek().map(|&(_, c)| c);
        let two = |second: char, tok: Tok| (next == Some(second)).then_some(tok);
        let pair = match c {
            '-' => two('>', Tok::Arrow),
            ':' => two('=', Tok::Define),
            '=' => two('=', Tok::EqEq),
            '!' => two('=', Tok::NotEq),
            '<' => two('=', Tok::Le),
            '>' => two('=', Tok::Ge),
            '&' => two('&', Tok::AndAnd),
            '|' => two('|', Tok::OrOr),
            _ => None,
        };
        let tok = if let Some(tok) = pair {
            last = Pos { line, column };
            chars.next();
            column += 1;
            tok
        } else {
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '~' => Tok::Tilde,
                '=' => Tok::Assign,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '%' => Tok::Percent,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '!' => Tok::Bang,
                other => {
                    return Err(ParseError {
                        line: pos.line,
                        column: pos.column,
                        message: format!("unexpected character {other:?}"),
                        expected: Vec::new(),
                    })
                }
            }
        };
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: last,
    });
    Ok(out)
}
