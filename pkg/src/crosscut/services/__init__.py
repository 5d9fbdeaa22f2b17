"""Services: geometry, synthesis, constraints, physics, solving, scoring and I/O."""
