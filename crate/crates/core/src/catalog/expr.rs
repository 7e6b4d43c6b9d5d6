//! Integer expressions in `d` and `j` used by the family and word data.

/// Evaluates `expr` with `+ - * /` (floor division) and parentheses.
pub(crate) fn eval(expr: &str, d: i64, j: Option<i64>) -> Result<i64, String> {
    let tokens: Vec<char> = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = Parser { tokens: &tokens, pos: 0, d, j };
    let value = p.sum()?;
    if p.pos != tokens.len() {
        return Err(format!("unexpected `{}` in `{expr}`", tokens[p.pos]));
    }
    Ok(value)
}

struct Parser<'a> {
    tokens: &'a [char],
    pos: usize,
    d: i64,
    j: Option<i64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.tokens.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<i64, String> {
        let mut acc = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<i64, String> {
        let mut acc = self.atom()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.atom()?;
            acc = if op == '*' {
                acc * rhs
            } else if rhs == 0 {
                return Err("division by zero".into());
            } else {
                acc.div_euclid(rhs)
            };
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<i64, String> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(')') {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some('-') => {
                self.pos += 1;
                Ok(-self.atom()?)
            }
            Some('d') => {
                self.pos += 1;
                Ok(self.d)
            }
            Some('j') => {
                self.pos += 1;
                self.j.ok_or_else(|| "`j` is not defined here".to_string())
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let text: String = self.tokens[start..self.pos].iter().collect();
                text.parse().map_err(|_| format!("bad integer `{text}`"))
            }
            Some(c) => Err(format!("unexpected `{c}`")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::eval;

    #[test]
    fn arithmetic() {
        assert_eq!(eval("d", 5, None), Ok(5));
        assert_eq!(eval("(d+1)/2", 6, None), Ok(3));
        assert_eq!(eval("d+1-j", 6, Some(2)), Ok(5));
        assert_eq!(eval("2*(d-2)", 5, None), Ok(6));
        assert!(eval("j", 5, None).is_err());
        assert!(eval("d+", 5, None).is_err());
        assert!(eval("d)", 5, None).is_err());
    }
}
