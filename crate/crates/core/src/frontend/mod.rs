//! Lexing, parsing, labelling and printing of the mini imperative language.

mod ast;
mod env;
mod lexer;
mod parser;
mod print;

use alloc::string::String;
use core::fmt;

pub use ast::*;
pub use env::{const_set, env_after, final_env, find_occurrence, occurrences, ConstOcc, Env, Occurrence, Site};
pub use parser::{parse, parse_decimal, rational_to_decimal_text};
pub use print::{print_annotated, print_program, Annot};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl SyntaxError {
    pub(crate) fn new(line: usize, col: usize, msg: &str) -> SyntaxError {
        SyntaxError {
            line,
            col,
            msg: String::from(msg),
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{}: {}", self.line, self.col, self.msg)
    }
}
