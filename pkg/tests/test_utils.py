from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from splitpipe.relaxation import BaseBoundProvider, CombinatorialBoundProvider, RltBoundProvider
from splitpipe.schemes import BcdScheme, NoPipelineScheme, RandomCutScheme, RandomPlacementScheme
from splitpipe.schemes_base import BaseScheme, SchemeResult
from splitpipe.utils import (
    bound_choices, get_bound_provider, get_bound_providers, get_scheme, get_scheme_backends, scheme_choices,
)


class FakeValidScheme(BaseScheme):
    verbose_name = 'Fake Valid Scheme'

    def solve(self, scenario, seed=None, **options):
        return SchemeResult('fake', None, 1, None)


class FakeValidScheme2(BaseScheme):
    verbose_name = 'Another Fake Valid Scheme'

    def solve(self, scenario, seed=None, **options):
        pass


class FakeInvalidSchemeNoInheritance():
    verbose_name = 'Fake Invalid Scheme (no inheritance)'

    def solve(self, scenario, seed=None, **options):
        pass


class FakeInvalidSchemeNoVerboseName(BaseScheme):
    def solve(self, scenario, seed=None, **options):
        pass


class FakeInvalidSchemeNoSolve(BaseScheme):
    verbose_name = 'Fake Invalid Scheme (no solve() definition)'


class FakeBoundProvider(BaseBoundProvider):
    verbose_name = 'Zero'

    def bound(self, graph, allow_node_reuse=None):
        pass


class GetSchemesTestCase(SimpleTestCase):
    def test_default_backends(self):
        expected = {
            'default': BcdScheme,
            'bcd': BcdScheme,
            'rc_op': RandomCutScheme,
            'rp_oc': RandomPlacementScheme,
            'no_pipeline': NoPipelineScheme,
        }

        backends = get_scheme_backends()

        self.assertDictEqual(backends, expected)

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'default': 'tests.test_utils.FakeValidScheme',
        'x': 'tests.test_utils.FakeValidScheme2',
    })
    def test_override_valid(self):
        expected = {
            'default': FakeValidScheme,
            'x': FakeValidScheme2,
        }

        backends = get_scheme_backends()

        self.assertDictEqual(backends, expected)
        self.assertEqual(get_scheme('default').solve(None).scheme, 'fake')

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'default': 'tests.whatever.something.terribly.Wrong',
    })
    def test_override_invalid_path_to_class_not_found(self):
        self.assertRaises(ImproperlyConfigured, get_scheme_backends)

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'default': 'tests.test_utils.FakeInvalidSchemeNoInheritance',
    })
    def test_override_invalid_class_does_not_inherit_from_base_scheme(self):
        self.assertRaises(ImproperlyConfigured, get_scheme_backends)

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'custom': 'tests.test_utils.FakeValidScheme',
    })
    def test_override_invalid_key_default_missing(self):
        self.assertRaises(ImproperlyConfigured, get_scheme_backends)

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'default': 'tests.test_utils.FakeInvalidSchemeNoVerboseName',
    })
    def test_override_invalid_class_does_not_define_verbose_name(self):
        self.assertRaises(ImproperlyConfigured, get_scheme_backends)

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'default': 'tests.test_utils.FakeInvalidSchemeNoSolve',
    })
    def test_override_invalid_class_does_not_define_solve(self):
        self.assertRaises(ImproperlyConfigured, get_scheme_backends)

    def test_unknown_key(self):
        self.assertRaises(ImproperlyConfigured, get_scheme, 'simulated_annealing')


class GetBoundProvidersTestCase(SimpleTestCase):
    def test_default_providers(self):
        self.assertDictEqual(get_bound_providers(), {
            'fast': CombinatorialBoundProvider,
            'rlt': RltBoundProvider,
        })
        self.assertIsInstance(get_bound_provider('rlt'), RltBoundProvider)

    @override_settings(SPLITPIPE_BOUND_PROVIDERS={
        'zero': 'tests.test_utils.FakeBoundProvider',
    })
    def test_override_valid(self):
        self.assertDictEqual(get_bound_providers(), {'zero': FakeBoundProvider})
        self.assertRaises(ImproperlyConfigured, get_bound_provider, 'fast')

    @override_settings(SPLITPIPE_BOUND_PROVIDERS={
        'fast': 'tests.test_utils.FakeValidScheme',
    })
    def test_override_invalid_base(self):
        self.assertRaises(ImproperlyConfigured, get_bound_providers)


class ChoicesTestCase(SimpleTestCase):
    def test_default_backends(self):
        expected = [
            ('default', 'Alternating optimisation'),
            ('bcd', 'Alternating optimisation'),
            ('no_pipeline', 'No pipeline'),
            ('rc_op', 'Random cuts, optimal placement'),
            ('rp_oc', 'Random placement, optimal cuts'),
        ]

        choices = scheme_choices()

        self.assertEqual(choices, expected)

    @override_settings(SPLITPIPE_SCHEME_BACKENDS={
        'default': 'tests.test_utils.FakeValidScheme',
        'x': 'tests.test_utils.FakeValidScheme2',
    })
    def test_override_valid(self):
        expected = [
            ('x', 'Another Fake Valid Scheme'),
            ('default', 'Fake Valid Scheme'),
        ]

        choices = scheme_choices()

        self.assertEqual(choices, expected)

    def test_bound_choices(self):
        self.assertEqual(bound_choices(), [
            ('rlt', 'Linear relaxation and shortest path'),
            ('fast', 'Shortest path without constraints'),
        ])
