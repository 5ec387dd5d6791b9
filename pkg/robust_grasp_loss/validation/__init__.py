"""Built-in robust grasp loss acceptance suite."""
