"""
factory-boy factories for the toolkit models.
"""

import factory
from factory.django import DjangoModelFactory

from mpoc.models import RegisteredProblem, RunRecord


def shifted_norm_document(a=-1.0, b=1.0, name='shifted norm'):
    """(x1 - a)^2 + (x2 - b)^2 with the planar pair x1 * x2 = 0, x2 >= 0."""
    return {
        'name': name,
        'n': 2,
        'quadratic_f': {'Q': [[2, 0], [0, 2]], 'c': [-2 * a, -2 * b], 'r': a * a + b * b},
        'coordinate_F1': [0],
        'coordinate_F2': [1],
        'stationary_points': [[a, 0], [0, b], [0, 0]],
    }


class RegisteredProblemFactory(DjangoModelFactory):
    class Meta:
        model = RegisteredProblem
        django_get_or_create = ('name',)

    name = factory.Sequence(lambda i: f'problem-{i}')
    description = factory.Faker('sentence', nb_words=6)
    document = factory.LazyAttribute(lambda obj: shifted_norm_document(name=obj.name))


class RunRecordFactory(DjangoModelFactory):
    class Meta:
        model = RunRecord

    subcommand = 'classify'
    problem = 'saddle'
    verdict = RunRecord.Verdict.POSITIVE
    seed = 42
    records = factory.LazyFunction(
        lambda: [{'record': 'classification', 'x': [0.0, 0.0], 'is_t_stationary': True}]
    )
