# Core package: configuration, logging and errors shared by tumordde
