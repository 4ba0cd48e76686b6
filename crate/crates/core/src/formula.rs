//! Stoichiometric formula grammar.
//!
//! ```text
//! Formula := Part ( Dot Count? Part )*
//! Part    := Unit+
//! Unit    := Element Count? | "(" Unit+ ")" Count?
//! Element := real element symbol (uppercase letter + optional lowercase)
//! Count   := integer | decimal        (strictly positive)
//! Dot     := "·" | "•" | "⋅"          (hydrate separator)
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Short tokens that collide with English words or SI unit symbols. They
/// only count as formulas when they carry a digit or a second element.
pub const AMBIGUOUS_SHORT: &[&str] =
    &["In", "As", "At", "I", "No", "He", "Be", "Am", "K", "V", "W", "Pa"];

const HYDRATE_DOTS: &[char] = &['·', '•', '⋅'];

pub fn element_symbol(s: &str) -> Option<&'static str> {
    ELEMENTS.iter().copied().find(|e| *e == s)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Positive rational stoichiometric count. Denominators are products of 2
/// and 5 since every count comes from a decimal literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Count {
    num: u64,
    den: u64,
}

impl Count {
    pub const ONE: Count = Count { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Option<Count> {
        if num == 0 || den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Count { num: num / g, den: den / g })
    }

    pub fn integer(n: u64) -> Option<Count> {
        Count::new(n, 1)
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn checked_mul(self, other: Count) -> Option<Count> {
        let g1 = gcd(self.num, other.den);
        let g2 = gcd(other.num, self.den);
        let num = (self.num / g1).checked_mul(other.num / g2)?;
        let den = (self.den / g2).checked_mul(other.den / g1)?;
        Count::new(num, den)
    }

    pub fn checked_add(self, other: Count) -> Option<Count> {
        let g = gcd(self.den, other.den);
        let den = (self.den / g).checked_mul(other.den)?;
        let num = self
            .num
            .checked_mul(other.den / g)?
            .checked_add(other.num.checked_mul(self.den / g)?)?;
        Count::new(num, den)
    }

    /// Parses `digits ("." digits)?`.
    pub fn parse(s: &str) -> Option<Count> {
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if s.contains('.') && (frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit())) {
            return None;
        }
        if int.len() > 9 || frac.len() > 9 {
            return None;
        }
        let mut num: u64 = 0;
        for b in int.bytes().chain(frac.bytes()) {
            num = num * 10 + u64::from(b - b'0');
        }
        Count::new(num, 10u64.pow(frac.len() as u32))
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            return write!(f, "{}", self.num);
        }
        let mut scale = 1u64;
        let mut places = 0usize;
        while !scale.is_multiple_of(self.den) {
            scale *= 10;
            places += 1;
        }
        let scaled = self.num * (scale / self.den);
        let int = scaled / scale;
        let frac = scaled % scale;
        write!(f, "{int}.{frac:0places$}")
    }
}

#[derive(Debug, Clone)]
pub struct FormulaComposition {
    /// Element counts in order of first appearance.
    pub elements: Vec<(&'static str, Count)>,
    pub surface: String,
}

impl FormulaComposition {
    pub fn get(&self, symbol: &str) -> Option<Count> {
        self.elements.iter().find(|(e, _)| *e == symbol).map(|&(_, c)| c)
    }

    /// Canonical spelling: each element once, count omitted when 1.
    pub fn canonical(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        for (e, c) in &self.elements {
            s.push_str(e);
            if *c != Count::ONE {
                let _ = write!(s, "{c}");
            }
        }
        s
    }
}

impl PartialEq for FormulaComposition {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}

type Units = Vec<(&'static str, Count)>;

fn merge_into(acc: &mut Units, items: &Units, factor: Count) -> Option<()> {
    for &(sym, c) in items {
        let c = c.checked_mul(factor)?;
        match acc.iter_mut().find(|(e, _)| *e == sym) {
            Some((_, existing)) => *existing = existing.checked_add(c)?,
            None => acc.push((sym, c)),
        }
    }
    Some(())
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn count(&mut self) -> Option<Option<Count>> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if start == self.pos {
            return Some(None);
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        Count::parse(&text).map(Some)
    }

    fn element(&mut self) -> Option<&'static str> {
        let first = self.peek().filter(char::is_ascii_uppercase)?;
        self.pos += 1;
        if let Some(second) = self.peek().filter(char::is_ascii_lowercase) {
            let mut two = String::new();
            two.push(first);
            two.push(second);
            self.pos += 1;
            return element_symbol(&two);
        }
        // Deuterium and tritium fold into hydrogen, and only with an
        // explicit count ("D2O" yes, "DFT" no).
        if matches!(first, 'D' | 'T') {
            return self.peek().filter(char::is_ascii_digit).map(|_| "H");
        }
        let mut one = String::new();
        one.push(first);
        element_symbol(&one)
    }

    /// Unit+ up to end of input, a hydrate dot, or (when nested) ")".
    fn units(&mut self, nested: bool) -> Option<Units> {
        let mut acc = Units::new();
        loop {
            match self.peek() {
                Some('(') => {
                    self.pos += 1;
                    let inner = self.units(true)?;
                    if self.peek() != Some(')') {
                        return None;
                    }
                    self.pos += 1;
                    let n = self.count()?.unwrap_or(Count::ONE);
                    merge_into(&mut acc, &inner, n)?;
                }
                Some(c) if c.is_ascii_uppercase() => {
                    let sym = self.element()?;
                    let n = self.count()?.unwrap_or(Count::ONE);
                    merge_into(&mut acc, &alloc::vec![(sym, Count::ONE)], n)?;
                }
                Some(')') if nested => break,
                Some(c) if HYDRATE_DOTS.contains(&c) && !nested => break,
                None => break,
                Some(_) => return None,
            }
        }
        (!acc.is_empty()).then_some(acc)
    }
}

/// Parses a token as a chemical formula. `None` means "not a formula".
pub fn parse_formula(token: &str) -> Option<FormulaComposition> {
    if token.is_empty() || !token.starts_with(|c: char| c.is_ascii_uppercase() || c == '(') {
        return None;
    }
    let chars: Vec<char> = token.chars().collect();
    let mut p = Parser { chars: &chars, pos: 0 };
    let mut elements = p.units(false)?;
    while let Some(c) = p.peek() {
        if !HYDRATE_DOTS.contains(&c) {
            return None;
        }
        p.pos += 1;
        let n = p.count()?.unwrap_or(Count::ONE);
        let part = p.units(false)?;
        merge_into(&mut elements, &part, n)?;
    }
    if AMBIGUOUS_SHORT.contains(&token)
        && !(token.bytes().any(|b| b.is_ascii_digit()) || elements.len() >= 2)
    {
        return None;
    }
    Some(FormulaComposition { elements, surface: String::from(token) })
}

pub fn is_formula(token: &str) -> bool {
    parse_formula(token).is_some()
}
