use std::fmt::{self, Write as _};

use crate::{LinearProgram, VarKind};

fn write_terms(out: &mut String, terms: impl Iterator<Item = (usize, f64)>, prog: &LinearProgram) {
    let mut first = true;
    for (j, coeff) in terms {
        let name = &prog.variables()[j].name;
        let (sign, magnitude) = if coeff < 0.0 {
            ("-", -coeff)
        } else {
            ("+", coeff)
        };
        if first {
            if sign == "-" {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if magnitude == 1.0 {
            out.push_str(name);
        } else {
            let _ = write!(out, "{magnitude} {name}");
        }
        first = false;
    }
    if first {
        out.push('0');
    }
}

impl LinearProgram {
    /// Renders the program in the CPLEX LP text format.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        out.push_str("Minimize\n obj: ");
        let objective = self
            .objective()
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c != 0.0);
        write_terms(&mut out, objective, self);
        if self.objective_offset() != 0.0 {
            let _ = write!(out, " + {} constant", self.objective_offset());
        }
        out.push_str("\nSubject To\n");
        for (r, c) in self.constraints().iter().enumerate() {
            if c.name.is_empty() {
                let _ = write!(out, " r{r}: ");
            } else {
                let _ = write!(out, " {}: ", c.name);
            }
            write_terms(&mut out, c.terms.iter().copied(), self);
            let _ = writeln!(out, " {} {}", c.relation, c.rhs);
        }
        out.push_str("Bounds\n");
        if self.objective_offset() != 0.0 {
            out.push_str(" constant = 1\n");
        }
        for v in self.variables() {
            if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
                continue;
            }
            if v.upper.is_infinite() {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            } else {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
            }
        }
        let binaries: Vec<&str> = self
            .variables()
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binary\n");
            for name in binaries {
                let _ = writeln!(out, " {name}");
            }
        }
        out.push_str("End\n");
        out
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_lp_string())
    }
}

#[cfg(test)]
mod tests {
    use crate::{LinearProgram, Relation};

    #[test]
    fn dump_lists_every_section() {
        let mut lp = LinearProgram::new();
        let x = lp.add_binary("x").unwrap();
        let t = lp.add_continuous("t", 0.0, 50.0).unwrap();
        lp.set_objective(t, 1.0).unwrap();
        lp.set_objective_offset(-3.0);
        lp.add_constraint("link", [(t, 1.0), (x, -15.0)], Relation::Ge, 0.0)
            .unwrap();
        let text = lp.to_lp_string();
        let expected = "Minimize\n obj: t + -3 constant\nSubject To\n link: - 15 x + t >= 0\n\
                        Bounds\n constant = 1\n 0 <= t <= 50\nBinary\n x\nEnd\n";
        assert_eq!(text, expected);
    }
}
