"""Linear difference equations with time-dependent delay."""
