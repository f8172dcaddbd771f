"""SS-HOPM solver and closed-form perturbation bounds."""
