use std::fmt;

/// Disease stage codes, fixed by the scenario file's `stage_ix_to_stages_dict`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Stage {
    Susceptible = 0,
    Asymptomatic = 1,
    PresymptomaticMild = 2,
    PresymptomaticSevere = 3,
    MildSymptoms = 4,
    SevereSymptoms = 5,
    Hospitalized = 6,
    CriticalIcu = 7,
    Death = 8,
    HospitalizedRecovering = 9,
    Recovered = 10,
}

pub const NUM_STAGES: usize = 11;

impl Stage {
    pub const ALL: [Stage; NUM_STAGES] = [
        Stage::Susceptible,
        Stage::Asymptomatic,
        Stage::PresymptomaticMild,
        Stage::PresymptomaticSevere,
        Stage::MildSymptoms,
        Stage::SevereSymptoms,
        Stage::Hospitalized,
        Stage::CriticalIcu,
        Stage::Death,
        Stage::HospitalizedRecovering,
        Stage::Recovered,
    ];

    pub fn from_code(code: u8) -> Option<Stage> {
        Stage::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Name used in scenario files.
    pub fn name(self) -> &'static str {
        match self {
            Stage::Susceptible => "SUSCEPTIBLE",
            Stage::Asymptomatic => "ASYMPTOMATIC",
            Stage::PresymptomaticMild => "PRESYMPTOMATIC_MILD",
            Stage::PresymptomaticSevere => "PRESYMPTOMATIC_SEVERE",
            Stage::MildSymptoms => "MILD_SYMPTOMS",
            Stage::SevereSymptoms => "SEVERE_SYMPTOMS",
            Stage::Hospitalized => "HOSPITALIZED",
            Stage::CriticalIcu => "CRITICAL_ICU",
            Stage::Death => "DEATH",
            Stage::HospitalizedRecovering => "HOSPITALIZED_RECOVERING",
            Stage::Recovered => "RECOVERED",
        }
    }

    pub fn is_absorbing(self) -> bool {
        matches!(self, Stage::Death | Stage::Recovered)
    }

    /// Currently carrying the infection.
    pub fn is_infected(self) -> bool {
        !matches!(self, Stage::Susceptible | Stage::Death | Stage::Recovered)
    }

    /// Stages that can pass the infection on through an edge.
    pub fn can_transmit(self) -> bool {
        matches!(
            self,
            Stage::Asymptomatic
                | Stage::PresymptomaticMild
                | Stage::PresymptomaticSevere
                | Stage::MildSymptoms
                | Stage::SevereSymptoms
        )
    }

    pub fn is_symptomatic(self) -> bool {
        matches!(self, Stage::MildSymptoms | Stage::SevereSymptoms)
    }

    /// In hospital (ward, ICU, or recovering ward).
    pub fn is_hospitalized(self) -> bool {
        matches!(
            self,
            Stage::Hospitalized | Stage::CriticalIcu | Stage::HospitalizedRecovering
        )
    }

    /// Removed from every interaction layer regardless of quarantine.
    pub fn is_isolated(self) -> bool {
        self.is_hospitalized() || self == Stage::Death
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for s in Stage::ALL {
            assert_eq!(Stage::from_code(s.code()), Some(s));
        }
        assert_eq!(Stage::from_code(11), None);
    }

    #[test]
    fn only_death_and_recovered_absorb() {
        let absorbing: Vec<_> = Stage::ALL.iter().filter(|s| s.is_absorbing()).collect();
        assert_eq!(absorbing, [&Stage::Death, &Stage::Recovered]);
    }
}
