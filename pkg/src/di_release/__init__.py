"""Privacy-preserving release of household consumption sequences.

A releaser network distorts the consumption so that an adversary cannot infer a
sensitive label, such as occupancy or the identity of the house, while the release
stays close to the actual consumption. The networks are stacked LSTMs that are
trained adversarially, with a penalty on an upper bound of the directed information
from the sensitive labels to their estimates.
"""
