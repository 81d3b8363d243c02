"""Signal algebra, channel model, cancellation engine, bounds and experiments."""
