# Relax pylint in the face of some pypubsub requirements. Pypubsub topics use
# msg_src rather than self, and they define a topic hierarchy rather than a
# class hierarchy where implementation is required.
#
# pylint: disable=no-self-argument,too-few-public-methods


class planner:
    """
    Root topic for events emitted by a running planner.
    """

    class solution:
        """
        Topic for events related to planner solutions.
        """

        class found:
            """
            Emitted when a planner run finds its first solution.
            """

            def msgDataSpec(msg_src, planner, cost, t):
                """
                - msg_src: component from which the event originated
                - planner: planner name
                - cost: length of the first solution
                - t: elapsed time (seconds or iterations) at first solution
                """

    class localopt:
        """
        Topic for events related to the local optimiser.
        """

        class applied:
            """
            Emitted when a planner has short-cut a path and, for the
            integrated planner, inserted it back into its graph.
            """

            def msgDataSpec(msg_src, planner, before, after, count):
                """
                - msg_src: component from which the event originated
                - planner: planner name
                - before: best length before the local optimisation
                - after: best length after the local optimisation
                - count: number of local optimisations so far in this run
                """


class bench:
    """
    Root topic for events emitted by the benchmark harness.
    """

    class run:
        """
        Topic for benchmark run lifecycle events.
        """

        class started:
            """
            Emitted when a benchmark run starts.
            """

            def msgDataSpec(msg_src, request):
                """
                - msg_src: component from which the event originated
                - request: RunRequest describing the run
                """

        class complete:
            """
            Emitted when a benchmark run completes.
            """

            def msgDataSpec(msg_src, request, trace):
                """
                - msg_src: component from which the event originated
                - request: RunRequest describing the run
                - trace: MetricsTrace recorded for the run
                """

        class failed:
            """
            Emitted when a benchmark run raised an exception.
            """

            def msgDataSpec(msg_src, request, error):
                """
                - msg_src: component from which the event originated
                - request: RunRequest describing the run
                - error: the exception raised
                """
