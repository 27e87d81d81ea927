//! Day-number date helpers (days since 1970-01-01).

use chrono::{Datelike, Months, NaiveDate};

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

pub fn parse_date(text: &str) -> Option<i32> {
    let date = NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d").ok()?;
    Some((date - epoch()).num_days() as i32)
}

pub fn format_date(days: i32) -> String {
    let date = epoch() + chrono::Duration::days(days as i64);
    format!("{:04}-{:02}-{:02}", date.year(), date.month(), date.day())
}

pub fn add_interval(days: i32, months: i32, extra_days: i32) -> Option<i32> {
    let date = epoch() + chrono::Duration::days(days as i64);
    let shifted = if months >= 0 {
        date.checked_add_months(Months::new(months as u32))?
    } else {
        date.checked_sub_months(Months::new(months.unsigned_abs()))?
    };
    Some((shifted - epoch()).num_days() as i32 + extra_days)
}
