//! Arithmetic expressions in parameter files.
//!
//! Grammar: numbers, `+ - * /`, parentheses, unary minus, identifiers that
//! name other keys of the same section, and `sin`/`cos`/`tan` of an angle in
//! degrees plus `sqrt`. Example: `22 + l4*sin(15)`.

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| format!("bad number `{text}`"))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Token::RParen);
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser<'a, F> {
    tokens: Vec<Token>,
    pos: usize,
    lookup: &'a mut F,
}

impl<F> Parser<'_, F>
where
    F: FnMut(&str) -> Result<f64, String>,
{
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut acc = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut acc = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == '*' { acc * rhs } else { acc / rhs };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Token::Num(v)) => Ok(v),
            Some(Token::LParen) => {
                let v = self.expr()?;
                self.expect_rparen()?;
                Ok(v)
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    apply(&name, arg)
                } else {
                    (self.lookup)(&name)
                }
            }
            Some(t) => Err(format!("unexpected {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), String> {
        match self.next() {
            Some(Token::RParen) => Ok(()),
            _ => Err("missing `)`".into()),
        }
    }
}

fn apply(func: &str, arg: f64) -> Result<f64, String> {
    match func {
        "sin" => Ok(arg.to_radians().sin()),
        "cos" => Ok(arg.to_radians().cos()),
        "tan" => Ok(arg.to_radians().tan()),
        "sqrt" => Ok(arg.sqrt()),
        other => Err(format!("unknown function `{other}`")),
    }
}

/// Evaluates `src`, resolving bare identifiers through `lookup`.
pub fn evaluate<F>(src: &str, lookup: &mut F) -> Result<f64, String>
where
    F: FnMut(&str) -> Result<f64, String>,
{
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        lookup,
    };
    let v = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(format!(
            "trailing input after expression: {:?}",
            parser.tokens[parser.pos]
        ));
    }
    if !v.is_finite() {
        return Err(format!("expression `{src}` is not finite"));
    }
    Ok(v)
}

/// Evaluates an expression that may not reference other keys.
pub fn evaluate_closed(src: &str) -> Result<f64, String> {
    evaluate(src, &mut |name: &str| Err(format!("unknown name `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(evaluate_closed("1 + 2*3").unwrap(), 7.0);
        assert_eq!(evaluate_closed("(1 + 2)*3").unwrap(), 9.0);
        assert_eq!(evaluate_closed("-2 - -3").unwrap(), 1.0);
        assert_eq!(evaluate_closed("8/4/2").unwrap(), 1.0);
        assert_eq!(evaluate_closed("1.5e2").unwrap(), 150.0);
        assert_eq!(evaluate_closed("2.5E-1").unwrap(), 0.25);
    }

    #[test]
    fn trig_takes_degrees() {
        let v = evaluate_closed("2.5*cos(15)").unwrap();
        assert_eq!(v, 2.5 * 15f64.to_radians().cos());
        assert!((v - 2.414_814_566).abs() < 1e-9);
        assert!((evaluate_closed("sin(30)").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identifiers_resolve() {
        let mut look = |n: &str| {
            if n == "l4" {
                Ok(2.0)
            } else {
                Err(format!("?{n}"))
            }
        };
        assert_eq!(evaluate("22 + l4*3", &mut look).unwrap(), 28.0);
        assert!(evaluate("l9", &mut look).is_err());
    }

    #[test]
    fn malformed_input() {
        for bad in ["", "1 +", "(1", "2 $ 3", "foo(1)", "1 2", "1/0"] {
            assert!(evaluate_closed(bad).is_err(), "{bad}");
        }
    }
}
