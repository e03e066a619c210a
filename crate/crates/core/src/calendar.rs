//! Month arithmetic for the historical window and the forecast horizon.

use std::fmt;

/// First month of the historical corpus.
pub const HISTORY_START: YearMonth = YearMonth::new_unchecked(2010, 1);
/// Last month of the historical corpus.
pub const HISTORY_END: YearMonth = YearMonth::new_unchecked(2019, 10);
/// First forecast month.
pub const HORIZON_START: YearMonth = YearMonth::new_unchecked(2019, 11);
/// Number of forecast months (Nov 2019 through Dec 2020).
pub const HORIZON_LEN: usize = 14;
/// Reference year for the regression's year index.
pub const BASE_YEAR: i32 = 2010;
/// The scenario year.
pub const SCENARIO_YEAR: i32 = 2020;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    const fn new_unchecked(year: i32, month: u8) -> Self {
        YearMonth { year, month }
    }

    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12)
            .contains(&month)
            .then_some(YearMonth { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months elapsed since January of year 0; monotone in calendar order.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        YearMonth {
            year: ordinal.div_euclid(12) as i32,
            month: (ordinal.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    pub fn year_index(self) -> i32 {
        self.year - BASE_YEAR
    }

    /// Calendar quarter, 1 to 4.
    pub fn quarter(self) -> u8 {
        (self.month - 1) / 3 + 1
    }

    pub fn in_history(self) -> bool {
        HISTORY_START <= self && self <= HISTORY_END
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.year, self.month)
    }
}

/// The forecast horizon months in order.
pub fn horizon() -> impl Iterator<Item = YearMonth> {
    (0..HORIZON_LEN as i64).map(|i| YearMonth::from_ordinal(HORIZON_START.ordinal() + i))
}

/// Position of `ym` inside the forecast horizon.
pub fn horizon_index(ym: YearMonth) -> Option<usize> {
    let offset = ym.ordinal() - HORIZON_START.ordinal();
    (0..HORIZON_LEN as i64)
        .contains(&offset)
        .then_some(offset as usize)
}
