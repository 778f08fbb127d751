# Systems T and S, experiments, series and reports
