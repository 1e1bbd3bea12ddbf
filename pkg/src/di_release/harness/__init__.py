"""Training, attacking, and evaluating release mechanisms.

The harness runs the alternating adversarial training (`.training`), trains an
independent attacker against the frozen releaser (`.attacker`), measures the
distortion and the privacy of a release (`.metrics`, `.spectrum`), and runs the
privacy-utility sweep over the privacy weight (`.sweep`).
"""
