"""
Reading anyplan.ini and initialising the harness settings, registering the
pypubsub topic tree and enabling pickling of worker exceptions.
"""
import os.path
from importlib import resources

from pubsub import pub
from tblib import pickling_support

import anyplan.event.topics

from .features import Features

# Set pypubsub to throw an error if topic in sendMessage does not correspond
# to a topic in the topic tree defined in anyplan.event.topics
pub.setTopicUnspecifiedFatal(True)

# Load the topic tree definition
pub.addTopicDefnProvider(anyplan.event.topics, pub.TOPIC_TREE_FROM_CLASS)

# exceptions raised in benchmark worker processes keep their tracebacks when
# sent back to the parent
pickling_support.install()

FEATURES = Features.create_from_config_files(
    os.path.expanduser("~/anyplan.ini"),
    str(resources.files(__name__).joinpath("anyplan.ini")),
)
