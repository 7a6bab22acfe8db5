//! The depositor interview.

mod question;
mod session;

pub use question::{AnswerKind, Question, TermDefinition};
pub use session::{
    Affirmation, Answer, InterviewError, Interviewer, Outcome, Session, Status, TranscriptEntry, MAX_OPEN_QUESTIONS,
};
